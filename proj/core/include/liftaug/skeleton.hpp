#pragma once

#include <array>
#include <string>
#include <vector>

#include "liftaug/tensor.hpp"

namespace liftaug {

/// Minimum admissible bone length (mm); shorter bones are degenerate.
constexpr double kMinBoneLength = 1e-6;

/// Kinematic tree over J joints. Bone k connects parent(child_k) to
/// child_k; bones are ordered by a depth-first walk from the root,
/// visiting children in ascending joint index. All modules share this
/// ordering.
class SkeletonTopology {
  public:
    static SkeletonTopology from_json_file(const std::string& path);
    static SkeletonTopology from_json_text(const std::string& text);

    int joint_count() const { return static_cast<int>(parents_.size()); }
    int bone_count() const { return joint_count() - 1; }
    int root() const { return root_; }
    int parent(int joint) const { return parents_[static_cast<size_t>(joint)]; }
    const std::vector<std::string>& joint_names() const { return names_; }
    int joint_index(const std::string& name) const;

    /// Child joint of bone k (its parent end is parent(bone_child(k))).
    int bone_child(int k) const { return bone_children_[static_cast<size_t>(k)]; }
    const std::vector<int>& bone_children() const { return bone_children_; }
    /// Bone index whose child end is the given non-root joint.
    int bone_of_child(int joint) const;

    /// Mirror-symmetric bone pairs as (left, right) bone indices.
    const std::vector<std::array<int, 2>>& symmetry_pairs() const { return symmetry_pairs_; }
    /// Symmetry class per bone: paired bones share a class, unpaired
    /// bones own one. Classes are numbered contiguously from 0 in bone
    /// order.
    const std::vector<int>& symmetry_class() const { return symmetry_class_; }
    int symmetry_class_count() const { return symmetry_class_count_; }

    /// Body part partition over bones, in the fixed order
    /// torso, left_arm, right_arm, left_leg, right_leg.
    int part_count() const { return static_cast<int>(parts_.size()); }
    const std::vector<int>& part(int i) const { return parts_[static_cast<size_t>(i)]; }
    const std::string& part_name(int i) const { return part_names_[static_cast<size_t>(i)]; }

    /// Difference matrix D ((J-1) x J): bones = D * joints.
    const Tensor& bone_matrix() const { return bone_matrix_; }
    /// Path matrix P (J x (J-1)): joints = root + P * bones.
    const Tensor& path_matrix() const { return path_matrix_; }

    /// Hash of the canonical serialization (names, parents, root,
    /// symmetry pairs, parts); identifies a topology across files.
    uint64_t hash() const { return hash_; }

  private:
    void finalize();

    std::vector<std::string> names_;
    std::vector<int> parents_;
    int root_ = 0;
    std::vector<int> bone_children_;
    std::vector<int> bone_index_of_child_;
    std::vector<std::array<int, 2>> symmetry_pairs_;
    std::vector<int> symmetry_class_;
    int symmetry_class_count_ = 0;
    std::vector<std::vector<int>> parts_;
    std::vector<std::string> part_names_;
    Tensor bone_matrix_;
    Tensor path_matrix_;
    uint64_t hash_ = 0;
};

/// 3D pose, J x 3, millimeters, camera frame.
struct Pose3D {
    Tensor joints;

    Pose3D() = default;
    explicit Pose3D(int joint_count) : joints(Tensor::zeros({joint_count, 3})) {}
    explicit Pose3D(Tensor t);

    int joint_count() const { return joints.rows(); }
    double x(int j) const { return joints.at(j, 0); }
    double y(int j) const { return joints.at(j, 1); }
    double z(int j) const { return joints.at(j, 2); }
    std::array<double, 3> joint(int j) const { return {x(j), y(j), z(j)}; }
    void set_joint(int j, double x, double y, double z);
    bool all_finite() const { return joints.all_finite(); }
};

/// 2D pose, J x 2, pixels.
struct Pose2D {
    Tensor joints;

    Pose2D() = default;
    explicit Pose2D(int joint_count) : joints(Tensor::zeros({joint_count, 2})) {}
    explicit Pose2D(Tensor t);

    int joint_count() const { return joints.rows(); }
    double u(int j) const { return joints.at(j, 0); }
    double v(int j) const { return joints.at(j, 1); }
};

/// Unit-direction / length decomposition of bone vectors.
struct BoneSet {
    Tensor directions;  // (J-1) x 3, each row unit norm
    Tensor lengths;     // {J-1}, positive, mm

    int bone_count() const { return directions.rows(); }
};

/// Bone vectors from joints: bone k = joints[child(k)] - joints[parent(k)].
Tensor hierarchical_transform(const SkeletonTopology& topo, const Pose3D& pose);
/// Joints from bone vectors, root placed at root_position.
Pose3D inverse_hierarchical(const SkeletonTopology& topo, const Tensor& bones,
                            const std::array<double, 3>& root_position);

/// Split raw bone vectors into unit directions and lengths; throws
/// DomainError on bones shorter than kMinBoneLength.
BoneSet decompose(const Tensor& bones);
/// Rebuild raw bone vectors from a BoneSet.
Tensor recompose(const BoneSet& bones);

/// Per-part Gram matrices of unit bone directions; part i yields an
/// n_i x n_i matrix over that part's bones.
struct PartKCS {
    std::vector<Tensor> parts;
};
PartKCS part_kcs(const SkeletonTopology& topo, const Pose3D& pose);
PartKCS part_kcs(const SkeletonTopology& topo, const Tensor& bones);
/// Whole-body variant: one (J-1) x (J-1) Gram matrix.
Tensor full_kcs(const SkeletonTopology& topo, const Pose3D& pose);
Tensor full_kcs(const SkeletonTopology& topo, const Tensor& bones);

}  // namespace liftaug
