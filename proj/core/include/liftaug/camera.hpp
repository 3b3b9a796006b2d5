#pragma once

#include "liftaug/skeleton.hpp"

namespace liftaug {

/// Default projection guard: joints closer than this depth (mm) are
/// treated as invalid.
constexpr double kZMin = 100.0;

/// Pinhole intrinsics, pixels.
struct Camera {
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

    void validate() const;
};

/// u = fx*x/z + cx, v = fy*y/z + cy per joint; throws DomainError when
/// any joint depth is at or below z_min.
Pose2D project(const Pose3D& pose, const Camera& cam, double z_min = kZMin);

/// True when every joint depth exceeds z_min.
bool camera_valid(const Pose3D& pose, double z_min = kZMin);

/// Normalized flat 2D input shared by the estimator and the 2D
/// discriminator: per joint ((u-cx)/s, (v-cy)/s) with s = max(fx, fy),
/// interleaved as a {1, 2J} row.
Tensor normalize_pose2d(const Pose2D& pose, const Camera& cam);

}  // namespace liftaug
