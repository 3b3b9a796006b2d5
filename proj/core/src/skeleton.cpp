#include "liftaug/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "liftaug/errors.hpp"
#include "liftaug/rng.hpp"

namespace liftaug {

namespace {
const std::array<const char*, 5> kPartOrder = {"torso", "left_arm", "right_arm", "left_leg",
                                               "right_leg"};
}

int SkeletonTopology::joint_index(const std::string& name) const {
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    throw DataError("unknown joint name: " + name);
}

int SkeletonTopology::bone_of_child(int joint) const {
    if (joint == root_) throw DomainError("root joint has no bone");
    return bone_index_of_child_[static_cast<size_t>(joint)];
}

SkeletonTopology SkeletonTopology::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open topology file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

SkeletonTopology SkeletonTopology::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("topology is not valid JSON: ") + e.what());
    }

    SkeletonTopology t;
    try {
        t.names_ = j.at("joint_names").get<std::vector<std::string>>();
        t.parents_ = j.at("parents").get<std::vector<int>>();
        t.root_ = j.at("root").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("topology missing required field: ") + e.what());
    }

    int J = static_cast<int>(t.names_.size());
    if (J < 2) throw DataError("topology needs at least 2 joints");
    if (static_cast<int>(t.parents_.size()) != J)
        throw DataError("parents length does not match joint_names");
    if (t.root_ < 0 || t.root_ >= J) throw DataError("root index out of range");
    for (int i = 0; i < J; ++i)
        for (int k = i + 1; k < J; ++k)
            if (t.names_[i] == t.names_[k]) throw DataError("duplicate joint name: " + t.names_[i]);
    for (int i = 0; i < J; ++i) {
        if (i == t.root_) {
            if (t.parents_[i] != -1) throw DataError("root joint must have parent -1");
            continue;
        }
        if (t.parents_[i] < 0 || t.parents_[i] >= J || t.parents_[i] == i)
            throw DataError("invalid parent for joint " + t.names_[i]);
        // every joint must reach the root without a cycle
        int cur = i;
        for (int steps = 0; cur != t.root_; ++steps) {
            if (steps > J) throw DataError("parent links contain a cycle at joint " + t.names_[i]);
            cur = t.parents_[static_cast<size_t>(cur)];
        }
    }

    auto bone_by_child_name = [&](const std::string& name) {
        int ji = t.joint_index(name);
        if (ji == t.root_) throw DataError("root joint cannot name a bone: " + name);
        return ji;
    };

    if (j.contains("symmetry_pairs")) {
        for (const auto& pr : j.at("symmetry_pairs")) {
            if (!pr.is_array() || pr.size() != 2)
                throw DataError("symmetry pair must be [left, right]");
            int l = bone_by_child_name(pr[0].get<std::string>());
            int r = bone_by_child_name(pr[1].get<std::string>());
            if (l == r) throw DataError("symmetry pair maps a bone to itself");
            t.symmetry_pairs_.push_back({l, r});  // joint indices; remapped in finalize()
        }
    }

    if (j.contains("parts")) {
        const auto& parts = j.at("parts");
        for (const char* pname : kPartOrder) {
            if (!parts.contains(pname))
                throw DataError(std::string("parts missing entry: ") + pname);
            std::vector<int> members;
            for (const auto& jn : parts.at(pname))
                members.push_back(bone_by_child_name(jn.get<std::string>()));
            if (members.empty()) throw DataError(std::string("empty part: ") + pname);
            t.parts_.push_back(std::move(members));
            t.part_names_.push_back(pname);
        }
        std::vector<int> seen(static_cast<size_t>(J), 0);
        for (const auto& part : t.parts_)
            for (int ji : part)
                if (seen[static_cast<size_t>(ji)]++)
                    throw DataError("bone assigned to two parts: " +
                                    t.names_[static_cast<size_t>(ji)]);
        for (int i = 0; i < J; ++i)
            if (i != t.root_ && !seen[static_cast<size_t>(i)])
                throw DataError("bone missing from parts: " + t.names_[static_cast<size_t>(i)]);
    }

    t.finalize();
    return t;
}

void SkeletonTopology::finalize() {
    int J = joint_count();

    // canonical bone order: depth-first from the root, children ascending
    bone_children_.clear();
    std::vector<std::vector<int>> children(static_cast<size_t>(J));
    for (int i = 0; i < J; ++i)
        if (i != root_) children[static_cast<size_t>(parents_[static_cast<size_t>(i)])].push_back(i);
    for (auto& c : children) std::sort(c.begin(), c.end());
    std::vector<int> stack = {root_};
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        if (cur != root_) bone_children_.push_back(cur);
        const auto& cs = children[static_cast<size_t>(cur)];
        for (auto it = cs.rbegin(); it != cs.rend(); ++it) stack.push_back(*it);
    }

    bone_index_of_child_.assign(static_cast<size_t>(J), -1);
    for (size_t k = 0; k < bone_children_.size(); ++k)
        bone_index_of_child_[static_cast<size_t>(bone_children_[k])] = static_cast<int>(k);

    // remap joint-index references to bone indices
    for (auto& pr : symmetry_pairs_) {
        pr[0] = bone_index_of_child_[static_cast<size_t>(pr[0])];
        pr[1] = bone_index_of_child_[static_cast<size_t>(pr[1])];
    }
    for (auto& part : parts_)
        for (int& m : part) m = bone_index_of_child_[static_cast<size_t>(m)];

    int nb = bone_count();
    symmetry_class_.assign(static_cast<size_t>(nb), -1);
    std::vector<int> partner(static_cast<size_t>(nb), -1);
    for (const auto& pr : symmetry_pairs_) {
        if (partner[static_cast<size_t>(pr[0])] != -1 || partner[static_cast<size_t>(pr[1])] != -1)
            throw DataError("bone appears in two symmetry pairs");
        partner[static_cast<size_t>(pr[0])] = pr[1];
        partner[static_cast<size_t>(pr[1])] = pr[0];
    }
    int next_class = 0;
    for (int k = 0; k < nb; ++k) {
        if (symmetry_class_[static_cast<size_t>(k)] != -1) continue;
        symmetry_class_[static_cast<size_t>(k)] = next_class;
        if (partner[static_cast<size_t>(k)] != -1)
            symmetry_class_[static_cast<size_t>(partner[static_cast<size_t>(k)])] = next_class;
        ++next_class;
    }
    symmetry_class_count_ = next_class;

    bone_matrix_ = Tensor::zeros({nb, J});
    for (int k = 0; k < nb; ++k) {
        int child = bone_children_[static_cast<size_t>(k)];
        bone_matrix_.at(k, child) = 1.0;
        bone_matrix_.at(k, parents_[static_cast<size_t>(child)]) = -1.0;
    }

    path_matrix_ = Tensor::zeros({J, nb});
    for (int jnt = 0; jnt < J; ++jnt) {
        int cur = jnt;
        while (cur != root_) {
            path_matrix_.at(jnt, bone_index_of_child_[static_cast<size_t>(cur)]) = 1.0;
            cur = parents_[static_cast<size_t>(cur)];
        }
    }

    std::ostringstream canon;
    for (int i = 0; i < J; ++i)
        canon << names_[static_cast<size_t>(i)] << ':' << parents_[static_cast<size_t>(i)] << ';';
    canon << "|root:" << root_;
    canon << "|sym:";
    for (const auto& pr : symmetry_pairs_) canon << pr[0] << ',' << pr[1] << ';';
    canon << "|parts:";
    for (size_t p = 0; p < parts_.size(); ++p) {
        canon << part_names_[p] << ':';
        for (int m : parts_[p]) canon << m << ',';
        canon << ';';
    }
    hash_ = hash_string(canon.str());
}

Pose3D::Pose3D(Tensor t) {
    if (t.rank() != 2 || t.cols() != 3)
        throw ShapeError("3D pose must be J x 3, got " + t.shape_str());
    joints = std::move(t);
}

void Pose3D::set_joint(int j, double xx, double yy, double zz) {
    joints.at(j, 0) = xx;
    joints.at(j, 1) = yy;
    joints.at(j, 2) = zz;
}

Pose2D::Pose2D(Tensor t) {
    if (t.rank() != 2 || t.cols() != 2)
        throw ShapeError("2D pose must be J x 2, got " + t.shape_str());
    joints = std::move(t);
}

Tensor hierarchical_transform(const SkeletonTopology& topo, const Pose3D& pose) {
    if (pose.joint_count() != topo.joint_count())
        throw ShapeError("pose joint count does not match topology");
    return matmul_nn(topo.bone_matrix(), pose.joints);
}

Pose3D inverse_hierarchical(const SkeletonTopology& topo, const Tensor& bones,
                            const std::array<double, 3>& root_position) {
    if (bones.rows() != topo.bone_count() || bones.cols() != 3)
        throw ShapeError("bone matrix must be (J-1) x 3");
    Tensor joints = matmul_nn(topo.path_matrix(), bones);
    for (int j = 0; j < topo.joint_count(); ++j)
        for (int c = 0; c < 3; ++c) joints.at(j, c) += root_position[static_cast<size_t>(c)];
    return Pose3D(std::move(joints));
}

BoneSet decompose(const Tensor& bones) {
    if (bones.rank() != 2 || bones.cols() != 3)
        throw ShapeError("bone matrix must be (J-1) x 3, got " + bones.shape_str());
    int nb = bones.rows();
    BoneSet out;
    out.directions = bones;
    out.lengths = Tensor::zeros({nb});
    for (int k = 0; k < nb; ++k) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) s += bones.at(k, c) * bones.at(k, c);
        double len = std::sqrt(s);
        if (len < kMinBoneLength)
            throw DomainError("degenerate bone " + std::to_string(k) + " (length " +
                              std::to_string(len) + " mm)");
        out.lengths[k] = len;
        for (int c = 0; c < 3; ++c) out.directions.at(k, c) /= len;
    }
    return out;
}

Tensor recompose(const BoneSet& bones) {
    Tensor out = bones.directions;
    for (int k = 0; k < out.rows(); ++k)
        for (int c = 0; c < 3; ++c) out.at(k, c) *= bones.lengths[k];
    return out;
}

namespace {

PartKCS part_kcs_from_dirs(const SkeletonTopology& topo, const Tensor& dirs) {
    PartKCS out;
    out.parts.reserve(static_cast<size_t>(topo.part_count()));
    for (int p = 0; p < topo.part_count(); ++p) {
        const auto& members = topo.part(p);
        int n = static_cast<int>(members.size());
        Tensor sub({n, 3});
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) sub.at(i, c) = dirs.at(members[static_cast<size_t>(i)], c);
        out.parts.push_back(matmul_nt(sub, sub));
    }
    return out;
}

}  // namespace

PartKCS part_kcs(const SkeletonTopology& topo, const Pose3D& pose) {
    return part_kcs(topo, hierarchical_transform(topo, pose));
}

PartKCS part_kcs(const SkeletonTopology& topo, const Tensor& bones) {
    if (topo.part_count() == 0) throw DataError("topology has no part assignment");
    return part_kcs_from_dirs(topo, decompose(bones).directions);
}

Tensor full_kcs(const SkeletonTopology& topo, const Pose3D& pose) {
    return full_kcs(topo, hierarchical_transform(topo, pose));
}

Tensor full_kcs(const SkeletonTopology& topo, const Tensor& bones) {
    if (bones.rows() != topo.bone_count()) throw ShapeError("bone count mismatch");
    Tensor dirs = decompose(bones).directions;
    return matmul_nt(dirs, dirs);
}

}  // namespace liftaug
