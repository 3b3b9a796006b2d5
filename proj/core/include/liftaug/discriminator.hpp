#pragma once

#include <span>

#include "liftaug/camera.hpp"
#include "liftaug/layers.hpp"
#include "liftaug/skeleton.hpp"

namespace liftaug {

struct DiscriminatorConfig {
    int width_3d = 256;
    int width_2d = 100;
    double leaky_slope = 0.2;
    /// When false, one encoder scores the whole-body Gram matrix
    /// (ablation) instead of per-part encoders.
    bool part_aware = true;
};

/// 3D pose discriminator over kinematic-chain Gram matrices: one
/// residual MLP encoder per body part (four linear layers, leaky ReLU,
/// skip connection), scores aggregated by unweighted mean.
class Discriminator3D {
  public:
    Discriminator3D(const SkeletonTopology& topo, const DiscriminatorConfig& cfg, uint64_t seed);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    bool part_aware() const { return part_aware_; }
    int encoder_count() const { return static_cast<int>(encoders_.size()); }

    /// Batched scores: one {B, n_i^2} input per encoder -> {B, 1}.
    Value score_batch(Tape& t, std::span<const Value> part_inputs, bool train_params) const;
    /// Single PartKCS (or full-KCS matrix packed as a 1-part input),
    /// differentiable w.r.t. parameters and input.
    Value score_graph(Tape& t, const PartKCS& kcs, bool train_params) const;
    double score(const PartKCS& kcs) const;

  private:
    struct Encoder {
        LinearLayer l1, l2, l3, l4;
    };
    Value encode(Tape& t, const Encoder& e, Value x, bool train_params) const;

    const SkeletonTopology* topo_;
    ParamStore params_;
    std::vector<Encoder> encoders_;
    std::vector<int> input_dims_;
    double leaky_slope_;
    bool part_aware_;
};

/// 2D pose discriminator over normalized flattened poses: four linear
/// layers, leaky ReLU, one residual connection.
class Discriminator2D {
  public:
    Discriminator2D(int joint_count, const DiscriminatorConfig& cfg, uint64_t seed);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// Batched: {B, 2J} normalized inputs -> {B, 1}.
    Value score_batch(Tape& t, Value norm2d, bool train_params) const;
    Value score_graph(Tape& t, const Pose2D& pose, const Camera& cam, bool train_params) const;
    double score(const Pose2D& pose, const Camera& cam) const;

  private:
    ParamStore params_;
    LinearLayer l1_, l2_, l3_, l4_;
    double leaky_slope_;
    int joint_count_;
};

/// LS-GAN discriminator objective over batched score columns:
/// E[(real-1)^2] + E[fake^2], summed over the 3D and 2D pairs.
/// Fake scores must come from gradient-stopped inputs.
Value discriminator_loss(Value real_3d, Value fake_3d, Value real_2d, Value fake_2d);

/// Generator-side guidance: E[(fake_3d-1)^2] + E[(fake_2d-1)^2].
Value generator_guidance_loss(Value fake_3d, Value fake_2d);

}  // namespace liftaug
