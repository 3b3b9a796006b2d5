#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "liftaug/augmentor.hpp"
#include "liftaug/dataset.hpp"
#include "liftaug/skeleton.hpp"

namespace liftaug {

struct EvalReport {
    double mpjpe_mm = 0.0;
    double pa_mpjpe_mm = 0.0;
    double pck = 0.0;
    double auc = 0.0;
    std::vector<double> per_sample_mpjpe_mm;

    std::string to_json() const;
};

/// Mean per-joint Euclidean distance (mm) over root-relative pose sets.
double mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt);

/// Per-sample similarity Procrustes alignment (rotation, translation,
/// uniform scale) of pred onto gt, then MPJPE. Throws DomainError on an
/// all-coincident prediction.
double pa_mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt);
Pose3D procrustes_align(const Pose3D& pred, const Pose3D& gt);

/// pck: fraction of joints with error under threshold_mm; auc: mean pck
/// over thresholds 0..curve_max_mm in curve_step_mm steps (inclusive).
std::pair<double, double> pck_auc(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt,
                                  double threshold_mm = 150.0, double curve_max_mm = 150.0,
                                  double curve_step_mm = 5.0);

EvalReport evaluate(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt);

/// View-point/position table: for each sampled source record and its
/// augmentation, the unit vector pointing from the subject root toward
/// the camera origin, expressed in the pose's own (pre-rigid-transform)
/// frame, plus the camera-frame root position (mm).
struct RtRow {
    std::array<double, 3> viewpoint;
    std::array<double, 3> position_mm;
};

struct RtDistribution {
    std::vector<RtRow> source;
    std::vector<RtRow> augmented;
    double source_cov_trace = 0.0;
    double augmented_cov_trace = 0.0;

    void write_csv(const std::string& path) const;
};

/// Samples n_samples records (cycling through the dataset) and augments
/// each with the network, retrying rejected draws.
RtDistribution export_rt_distribution(const AugmentorNet& net,
                                      const std::vector<PoseRecord>& records, int n_samples,
                                      Rng& rng);

/// Same table for externally supplied augmentation parameters.
RtDistribution export_rt_distribution_params(
    const SkeletonTopology& topo,
    const std::function<AugmentationParams(const PoseRecord&, int)>& sample_params,
    const std::vector<PoseRecord>& records, int n_samples);

}  // namespace liftaug
