#pragma once

#include <string>

#include "liftaug/augmentor.hpp"
#include "liftaug/discriminator.hpp"
#include "liftaug/estimator.hpp"
#include "liftaug/synthetic.hpp"

namespace liftaug {

/// Environment variable consulted for a config file path when no
/// --config flag is given.
constexpr const char* kConfigEnvVar = "LIFTAUG_CONFIG";

struct TrainConfig {
    int epochs = 50;
    int batch_size = 1024;  // clamped to the dataset size per epoch
    double lr = 1e-3;
    double beta_start = 2.0;
    double beta_end = 20.0;
    double reg_threshold = 0.1;
    double w_adv = 1.0;
    int pretrain_epochs = 5;
    int checkpoint_every = 0;  // epochs between checkpoints; 0 = final only
    /// Literal algorithm order: all augmentor/discriminator batches first,
    /// then estimator batches over original + augmented pools.
    bool estimator_per_epoch = false;
    /// Disables the augmentation phases entirely; the loop reduces to
    /// supervised training on the original pairs.
    bool augmentation = true;
    /// Hash parameter stores around each phase and assert isolation.
    bool isolation_check = false;

    void validate() const;
};

struct ModelConfig {
    EstimatorConfig estimator;
    AugmentorConfig augmentor;
    DiscriminatorConfig discriminator;
};

struct RunConfig {
    uint64_t seed = 1;
    std::string topology_path = "data/skeleton_h36m16.json";
    std::string external_2d_path;  // optional extra real-2D pool for the 2D discriminator
    ModelConfig model;
    TrainConfig train;
    SyntheticConfig synthetic;
};

/// JSON file mirroring the field names above; absent keys keep defaults.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);
void save_run_config(const std::string& path, const RunConfig& cfg);
std::string run_config_json(const RunConfig& cfg);

}  // namespace liftaug
