#pragma once

#include <memory>
#include <string>
#include <vector>

#include "liftaug/adam.hpp"
#include "liftaug/augmentor.hpp"
#include "liftaug/config.hpp"
#include "liftaug/dataset.hpp"
#include "liftaug/discriminator.hpp"
#include "liftaug/estimator.hpp"
#include "liftaug/evaluation.hpp"

namespace liftaug {

/// Linear hardness schedule: beta_start at epoch 0, beta_end at the
/// final epoch.
double beta_schedule(int epoch, int epochs, double beta_start, double beta_end);
/// Linear learning-rate decay factor: 1 at epoch 0, 1/epochs at the
/// final epoch.
double lr_decay(int epoch, int epochs);
/// Stable per-network seed derivation from the run seed.
uint64_t net_seed(uint64_t run_seed, std::string_view role);

struct EpochLog {
    std::string phase;  // "pretrain" or "train"
    int epoch = 0;      // index within its phase
    double lp_orig = 0.0;  // estimator loss, original pairs (m^2)
    double lp_aug = 0.0;   // estimator loss, accepted augmented pairs (m^2)
    double l_fb = 0.0;
    double l_reg = 0.0;
    double l_adv = 0.0;        // generator guidance term (unweighted)
    double l_aug_total = 0.0;  // full augmentor objective
    double d_loss = 0.0;
    double beta = 0.0;
    double lr_scale = 1.0;
    double reject_rate = 0.0;
    long saturations = 0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochLog& log);

struct TrainResult {
    std::vector<EpochLog> log;
    std::vector<std::string> checkpoints;
    std::string metrics_path;
};

/// Joint training loop: per batch, the augmentor updates against the
/// frozen estimator and discriminators, the discriminators update on
/// real vs. detached augmented samples, and the estimator updates on the
/// union of original and augmented pairs (optionally deferred to the end
/// of the epoch).
class Trainer {
  public:
    Trainer(const SkeletonTopology& topo, Dataset train_data, const RunConfig& cfg);

    /// Optional extra real pool for the 2D discriminator, one normalized
    /// {1, 2J} row per pose.
    void set_external_2d(std::vector<Tensor> rows);

    void pretrain();
    void train_epoch();
    /// pretrain + all epochs + checkpoints + metrics CSV under out_dir.
    TrainResult run(const std::string& out_dir);

    EstimatorNet& estimator() { return *estimator_; }
    AugmentorNet& augmentor() { return *augmentor_; }
    Discriminator3D& d3d() { return *d3d_; }
    Discriminator2D& d2d() { return *d2d_; }
    const RunConfig& config() const { return cfg_; }

    const std::vector<EpochLog>& log() const { return log_; }
    int epochs_done() const { return epoch_; }
    int pretrain_epochs_done() const { return pretrain_done_; }
    long last_epoch_rejected() const { return last_rejected_; }
    long last_epoch_attempted() const { return last_attempted_; }

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

  private:
    struct BatchStash {
        std::vector<Tensor> x_rows;  // {1, 2J} detached augmented inputs
        std::vector<Tensor> y_rows;  // {1, 3J} detached augmented targets
    };

    std::vector<int> make_batches(int epoch_index, const char* tag, int pool_size,
                                  std::vector<size_t>* perm_out) const;
    int batch_size_for(int pool_size) const;
    double estimator_step(const std::vector<Tensor*>& x_rows, const std::vector<Tensor*>& y_rows,
                          double lr_scale);
    void isolation_guard(uint64_t est, uint64_t aug, uint64_t d3, uint64_t d2,
                         const char* phase) const;

    const SkeletonTopology* topo_;
    RunConfig cfg_;
    Dataset data_;
    Rng rng_;

    std::unique_ptr<EstimatorNet> estimator_;
    std::unique_ptr<AugmentorNet> augmentor_;
    std::unique_ptr<Discriminator3D> d3d_;
    std::unique_ptr<Discriminator2D> d2d_;

    Adam adam_est_, adam_aug_, adam_d3_, adam_d2_;

    // per-record caches
    std::vector<Tensor> norm2d_rows_;          // {1, 2J}
    std::vector<Tensor> target_rows_;          // {1, 3J}, meters, root-relative
    std::vector<std::vector<Tensor>> kcs_rows_;  // per record, per encoder {1, n^2}
    std::vector<Tensor> external_2d_;

    int epoch_ = 0;          // completed main epochs
    int pretrain_done_ = 0;  // completed pretrain epochs
    long global_step_ = 0;   // estimator updates (dropout stream key)
    long last_rejected_ = 0;
    long last_attempted_ = 0;
    std::vector<EpochLog> log_;
};

/// Batched eval-mode lifting of every record; outputs root-relative
/// millimeter poses.
std::vector<Pose3D> lift_dataset(const EstimatorNet& est, const std::vector<PoseRecord>& records);
/// Ground-truth root-relative millimeter poses.
std::vector<Pose3D> root_relative_poses(const SkeletonTopology& topo,
                                        const std::vector<PoseRecord>& records);
EvalReport evaluate_estimator(const EstimatorNet& est, const SkeletonTopology& topo,
                              const std::vector<PoseRecord>& records);

}  // namespace liftaug
