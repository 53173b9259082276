#include "mvdc/camera.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace mvdc {

bool ViewPose::is_valid(double tol) const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if (((gram - Eigen::Matrix3d::Identity()).array().abs() > tol).any()) return false;
    if (std::abs(rotation.determinant() - 1.0) > tol) return false;
    return translation.allFinite();
}

Point3 back_project(const Pixel3& p, const ViewPose& pose, const Intrinsics& k) {
    if (!std::isfinite(p.u) || !std::isfinite(p.v) || !std::isfinite(p.d)) {
        throw std::domain_error("back_project: non-finite pixel");
    }
    Eigen::Vector3d q;
    if (k.model == CameraModel::kPerspective) {
        if (p.d <= 0.0) throw std::domain_error("back_project: nonpositive depth under perspective");
        q = Eigen::Vector3d((p.u - k.cx) * p.d / k.fx, (p.v - k.cy) * p.d / k.fy, p.d);
    } else {
        q = Eigen::Vector3d((p.u - k.cx) / k.fx, (p.v - k.cy) / k.fy, p.d);
    }
    return pose.rotation.transpose() * (q - pose.translation);
}

std::optional<Pixel3> project(const Point3& point, const ViewPose& pose, const Intrinsics& k) {
    const Eigen::Vector3d q = pose.rotation * point + pose.translation;
    Pixel3 p;
    if (k.model == CameraModel::kPerspective) {
        if (q.z() <= 0.0) return std::nullopt;
        p.u = k.fx * q.x() / q.z() + k.cx;
        p.v = k.fy * q.y() / q.z() + k.cy;
    } else {
        p.u = k.fx * q.x() + k.cx;
        p.v = k.fy * q.y() + k.cy;
    }
    p.d = q.z();
    return p;
}

ViewPose look_at_pose(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                      const Eigen::Vector3d& up) {
    const Eigen::Vector3d forward = (target - center).normalized();
    Eigen::Vector3d ref = up;
    if (forward.cross(ref).norm() < 1e-9) ref = Eigen::Vector3d::UnitX();
    const Eigen::Vector3d x_axis = ref.cross(forward).normalized();
    const Eigen::Vector3d y_axis = forward.cross(x_axis);

    ViewPose pose;
    pose.rotation.row(0) = x_axis.transpose();
    pose.rotation.row(1) = y_axis.transpose();
    pose.rotation.row(2) = forward.transpose();
    pose.translation = -pose.rotation * center;
    return pose;
}

CameraRig cube_corner_rig(double distance, int height, int width, const Intrinsics& k) {
    if (distance <= 0.0) throw std::domain_error("cube_corner_rig: distance must be positive");
    CameraRig rig;
    rig.width = width;
    rig.height = height;
    const double a = distance / std::sqrt(3.0);
    for (int sx : {-1, 1}) {
        for (int sy : {-1, 1}) {
            for (int sz : {-1, 1}) {
                const Eigen::Vector3d corner(sx * a, sy * a, sz * a);
                rig.views.push_back({look_at_pose(corner, Eigen::Vector3d::Zero()), k});
            }
        }
    }
    return rig;
}

}  // namespace mvdc
