#pragma once

#include <string>
#include <vector>

#include "liftaug/camera.hpp"
#include "liftaug/dataset.hpp"
#include "liftaug/skeleton.hpp"

namespace liftaug {

/// Camera placement distribution: cameras sit on a ring around the
/// subject (y-up world), parameterized by radius, elevation and a
/// full-circle azimuth, looking at a jittered point near the subject.
struct CameraRing {
    double radius_min_mm = 4500.0;
    double radius_max_mm = 5500.0;
    double elevation_min_rad = 0.0;
    double elevation_max_rad = 0.35;
    double look_jitter_mm = 250.0;
};

struct SyntheticConfig {
    int source_train = 2000;
    int source_test = 500;
    int target_test = 1000;

    /// Per-bone posture angle ranges (radians), canonical bone order;
    /// empty means angle_range_default everywhere.
    std::vector<double> angle_ranges_rad;
    double angle_range_default = 0.4;

    /// Template bone lengths (mm), canonical bone order; empty keeps the
    /// built-in template.
    std::vector<double> template_lengths_mm;

    CameraRing source_ring;
    CameraRing target_ring{3500.0, 7500.0, -0.5, 0.8, 700.0};

    /// Uniform whole-body scale applied to target subjects only.
    double target_scale_min = 0.85;
    double target_scale_max = 1.15;

    Camera intrinsics{1150.0, 1150.0, 500.0, 500.0};

    void validate(const SkeletonTopology& topo) const;
};

struct SyntheticStats {
    double source_elevation_var = 0.0;
    double target_elevation_var = 0.0;
};

struct SyntheticOutput {
    Dataset source_train;
    Dataset source_test;
    Dataset target_test;
    SyntheticStats stats;
};

/// Deterministic in (topology, config, seed); records are generated from
/// independent per-record streams, so pool sizes can change without
/// disturbing earlier records.
SyntheticOutput generate_synthetic(const SkeletonTopology& topo, const SyntheticConfig& cfg,
                                   uint64_t seed);

}  // namespace liftaug
