#pragma once

#include "liftaug/camera.hpp"
#include "liftaug/layers.hpp"
#include "liftaug/skeleton.hpp"

namespace liftaug {

struct EstimatorConfig {
    int width = 1024;
    int blocks = 4;
    double dropout = 0.25;
};

enum class NetMode { train, eval };

/// 2D -> 3D lifting network: input projection, residual blocks of two
/// linear+batch-norm+ReLU+dropout stages with a skip connection, and an
/// output layer. Consumes normalized 2D rows, emits root-relative 3D in
/// meters; the root coordinates are exactly zero by construction.
class EstimatorNet {
  public:
    EstimatorNet(int joint_count, int root_index, EstimatorConfig cfg, uint64_t seed);

    const EstimatorConfig& config() const { return cfg_; }
    int joint_count() const { return joint_count_; }
    int root_index() const { return root_index_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// Batched forward on a tape: {B, 2J} -> {B, 3J} (meters, root-
    /// relative). dropout_rng must be non-null in train mode.
    Value forward(Tape& t, Value norm2d, NetMode mode, bool train_params,
                  Rng* dropout_rng = nullptr) const;

    /// Eval-mode forward without a tape.
    Tensor forward_value(const Tensor& norm2d) const;

    /// Single-pose convenience: normalize, lift, returns millimeters.
    Pose3D estimate(const Pose2D& pose, const Camera& cam, NetMode mode,
                    Rng* dropout_rng = nullptr) const;

  private:
    struct Block {
        LinearLayer l1, l2;
        BatchNormLayer bn1, bn2;
    };

    int joint_count_;
    int root_index_;
    EstimatorConfig cfg_;
    ParamStore params_;
    LinearLayer input_;
    BatchNormLayer input_bn_;
    std::vector<Block> blocks_;
    LinearLayer output_;
    Tensor root_tile_;  // 3 x 3J selector used to recenter the root
};

/// Mean over batch and joints of squared Euclidean joint distances.
/// Units follow the inputs (mm -> mm^2).
double pose_loss(const Pose3D& pred, const Pose3D& gt);
/// Batched graph form over {B, 3J} root-relative rows.
Value pose_loss_graph(Value pred, Value gt);

}  // namespace liftaug
