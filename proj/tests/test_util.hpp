#pragma once

#include "mvdc/camera.hpp"
#include "mvdc/rng.hpp"

#include <cmath>

namespace mvdc::testing {

inline ViewPose random_pose(CounterRng& rng, double translation_scale = 2.0) {
    double q[4];
    double norm2 = 0.0;
    for (double& x : q) {
        x = rng.gaussian();
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;

    ViewPose pose;
    pose.rotation << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    pose.translation = Eigen::Vector3d(rng.uniform(-translation_scale, translation_scale),
                                       rng.uniform(-translation_scale, translation_scale),
                                       rng.uniform(-translation_scale, translation_scale));
    return pose;
}

inline Intrinsics random_intrinsics(CounterRng& rng, bool allow_orthographic = true) {
    Intrinsics k;
    k.fx = rng.uniform(50.0, 500.0);
    k.fy = rng.uniform(50.0, 500.0);
    k.cx = rng.uniform(0.0, 256.0);
    k.cy = rng.uniform(0.0, 256.0);
    k.model = allow_orthographic && rng.next_double() < 0.25 ? CameraModel::kOrthographic
                                                             : CameraModel::kPerspective;
    return k;
}

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool close_rel(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double tol) {
    return (a - b).norm() <= tol * std::max(1.0, b.norm());
}

}  // namespace mvdc::testing
