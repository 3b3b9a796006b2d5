#pragma once

#include <array>

#include "liftaug/camera.hpp"
#include "liftaug/layers.hpp"
#include "liftaug/skeleton.hpp"

namespace liftaug {

/// One sampled augmentation: bone-angle residuals, symmetry-tied length
/// ratios, and a rigid transform.
struct AugmentationParams {
    Tensor gamma_ba;     // (J-1) x 3
    Tensor gamma_bl;     // {J-1}
    Tensor rotation;     // 3 x 3, orthonormal, det +1
    Tensor translation;  // {3}, mm

    void validate(const SkeletonTopology& topo) const;
};

struct AugmentorConfig {
    int width = 256;
    int noise_dim = 48;
    double leaky_slope = 0.2;
    // tanh output boxes
    double s_ba = 1.0;
    double s_bl = 0.5;
    std::array<double, 3> s_t = {1000.0, 1000.0, 3000.0};
    std::array<double, 3> t0 = {0.0, 0.0, 5500.0};
    /// Anchor translations at each source pose's root instead of t0.
    bool t0_source_root = false;
    // op subset (RT-only ablation disables ba and bl)
    bool enable_ba = true;
    bool enable_bl = true;
    bool enable_rt = true;
    double z_min = kZMin;
    /// mm -> m conditioning applied to pose inputs.
    double input_scale = 1e-3;

    void validate() const;
};

/// Differentiable Rodrigues map: axis-angle {1,3} (or {3}) to a 3x3
/// rotation; well-defined and smooth at zero.
Tensor rodrigues(const Tensor& axis_angle);
Value rodrigues_graph(Tape& t, Value axis_angle);

// Value-level augmentation ops.
/// Directions replaced by normalize(d + gamma_ba); lengths kept.
BoneSet apply_ba(const BoneSet& bones, const Tensor& gamma_ba);
/// Lengths scaled by (1 + gamma_bl); directions kept.
BoneSet apply_bl(const BoneSet& bones, const Tensor& gamma_bl);
/// Recompose, root at origin, rotate by R, translate by t. Throws
/// DomainError when any resulting depth fails the z_min guard.
Pose3D apply_rt(const BoneSet& bones, const Tensor& R, const Tensor& t,
                const SkeletonTopology& topo, double z_min = kZMin);

/// Pose augmentor: shared trunk (four linear + batch norm + leaky ReLU,
/// width 256) over [root-centered pose, Gaussian noise], with heads for
/// gamma_ba (3(J-1)), gamma_bl (one per symmetry class), rotation (3)
/// and translation (3).
class AugmentorNet {
  public:
    AugmentorNet(const SkeletonTopology& topo, AugmentorConfig cfg, uint64_t seed);

    const AugmentorConfig& config() const { return cfg_; }
    const SkeletonTopology& topology() const { return *topo_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    int input_dim() const { return 3 * topo_->joint_count() + cfg_.noise_dim; }

    /// Root-centered, scaled pose concatenated with noise: {1, 3J+noise_dim}.
    Tensor make_input(const Pose3D& pose, const Tensor& noise) const;

    struct Heads {
        Value ba, bl_classes, rot, trans;
    };
    Heads forward_heads(Tape& t, Value input, bool bn_train, bool train_params) const;

    struct HeadsValue {
        Tensor ba, bl_classes, rot, trans;
    };
    /// Eval-mode forward without a tape.
    HeadsValue forward_heads_value(const Tensor& input) const;

    /// Raw head rows for one sample to validated parameters. t0 is the
    /// translation anchor (config t0 or the source root).
    AugmentationParams map_params(const Tensor& ba_row, const Tensor& bl_row,
                                  const Tensor& rot_row, const Tensor& trans_row,
                                  const std::array<double, 3>& t0) const;

    std::array<double, 3> translation_anchor(const Pose3D& source) const;

    /// Symmetry-class broadcast matrix (classes x (J-1)).
    const Tensor& class_matrix() const { return class_matrix_; }

  private:
    const SkeletonTopology* topo_;
    AugmentorConfig cfg_;
    ParamStore params_;
    std::array<LinearLayer, 4> trunk_;
    std::array<BatchNormLayer, 4> bn_;
    LinearLayer head_ba_, head_bl_, head_rot_, head_t_;
    Tensor class_matrix_;
};

/// Full augmentation result for one source pose.
struct AugmentResult {
    Pose3D pose3d;  // camera frame, mm
    Pose2D pose2d;  // pixels
    AugmentationParams params;
};

/// Value-level pipeline: regress -> BA -> BL -> RT -> project. Throws
/// DomainError when the augmented pose fails validity (callers running
/// batches skip and count such samples).
AugmentResult augment(const AugmentorNet& net, const Pose3D& pose, const Camera& cam, Rng& rng);

/// Differentiable per-sample pipeline over raw head rows already on the
/// tape. Rejected samples keep accepted == false and leave the remaining
/// fields undefined.
struct SampleAugGraph {
    bool accepted = false;
    std::string reject_reason;
    Value pose3d_mm;              // J x 3, camera frame
    Value rel3d_m_row;            // {1, 3J}, root-relative, meters
    Value norm2d_row;             // {1, 2J}, normalized image coords
    std::vector<Value> kcs_rows;  // per part {1, n_p^2}, or one full row
    Value gamma_ba;               // (J-1) x 3
    Value gamma_bl;               // {1, J-1}
    Value rotation;               // 3 x 3
    Value translation;            // {1, 3}
};

SampleAugGraph build_augment_graph(Tape& tape, const AugmentorNet& net, const Pose3D& source,
                                   const Camera& cam, Value ba_row, Value bl_row, Value rot_row,
                                   Value trans_row, bool full_kcs_mode);

}  // namespace liftaug
