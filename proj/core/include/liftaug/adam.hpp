#pragma once

#include <map>

#include "liftaug/graph.hpp"

namespace liftaug {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Per-parameter first/second moment estimates.
struct AdamSlot {
    Tensor m1;
    Tensor m2;
};

/// Adam with bias correction. One optimizer instance owns the slots for
/// the parameter group it steps. lr_scale multiplies the base learning
/// rate (used for linear decay schedules).
class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    /// Apply one update to every trainable parameter in the group using
    /// the gradients currently accumulated on them. Throws TrainingError
    /// naming the parameter if a gradient is not finite.
    void step(std::vector<Param*> params, double lr_scale = 1.0);

    long step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

    /// Serialization access for checkpoints.
    std::map<std::string, AdamSlot>& slots() { return slots_; }
    const std::map<std::string, AdamSlot>& slots() const { return slots_; }
    void set_step_count(long n) { step_count_ = n; }

  private:
    AdamConfig cfg_;
    std::map<std::string, AdamSlot> slots_;
    long step_count_ = 0;
};

}  // namespace liftaug
