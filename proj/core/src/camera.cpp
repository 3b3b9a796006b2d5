#include "liftaug/camera.hpp"

#include <algorithm>
#include <cmath>

#include "liftaug/errors.hpp"

namespace liftaug {

void Camera::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(cx) || !std::isfinite(cy))
        throw DataError("invalid camera intrinsics");
}

Pose2D project(const Pose3D& pose, const Camera& cam, double z_min) {
    cam.validate();
    int J = pose.joint_count();
    Pose2D out(J);
    for (int j = 0; j < J; ++j) {
        double z = pose.z(j);
        if (!(z > z_min))
            throw DomainError("joint " + std::to_string(j) + " depth " + std::to_string(z) +
                              " mm at or below projection guard");
        out.joints.at(j, 0) = cam.fx * pose.x(j) / z + cam.cx;
        out.joints.at(j, 1) = cam.fy * pose.y(j) / z + cam.cy;
    }
    return out;
}

bool camera_valid(const Pose3D& pose, double z_min) {
    for (int j = 0; j < pose.joint_count(); ++j)
        if (!(pose.z(j) > z_min)) return false;
    return true;
}

Tensor normalize_pose2d(const Pose2D& pose, const Camera& cam) {
    cam.validate();
    double s = std::max(cam.fx, cam.fy);
    int J = pose.joint_count();
    Tensor out({1, 2 * J});
    for (int j = 0; j < J; ++j) {
        out[2 * j] = (pose.u(j) - cam.cx) / s;
        out[2 * j + 1] = (pose.v(j) - cam.cy) / s;
    }
    return out;
}

}  // namespace liftaug
