#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace mvdc {

enum class CameraModel { kPerspective, kOrthographic };

/// Pinhole (or orthographic) intrinsics. Focal lengths and principal point
/// are in pixels; for the orthographic model fx/fy are pixels per scene unit.
struct Intrinsics {
    double fx = 256.0;
    double fy = 256.0;
    double cx = 127.5;
    double cy = 127.5;
    CameraModel model = CameraModel::kPerspective;
};

/// World-to-camera rigid transform: q = rotation * P + translation.
/// rotation must be orthonormal with determinant +1.
struct ViewPose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    /// Camera center in world coordinates (-Rᵀ t).
    Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

    /// Optical axis in world coordinates (camera +z).
    Eigen::Vector3d view_direction() const { return rotation.row(2).transpose(); }

    bool is_valid(double tol = 1e-9) const;
};

/// A pixel location with its depth value.
struct Pixel3 {
    double u = 0.0;
    double v = 0.0;
    double d = 0.0;
};

using Point3 = Eigen::Vector3d;

struct View {
    ViewPose pose;
    Intrinsics intrinsics;
};

/// Ordered set of views sharing an image resolution.
struct CameraRig {
    std::vector<View> views;
    int width = 0;
    int height = 0;

    int size() const { return static_cast<int>(views.size()); }
};

/// Lifts pixel (u, v, d) into world coordinates.
///
/// Camera-space point: perspective q = ((u-cx) d / fx, (v-cy) d / fy, d),
/// orthographic q = ((u-cx) / fx, (v-cy) / fy, d). Returns Rᵀ (q - t).
/// Throws std::domain_error on non-finite input or d <= 0 under perspective.
Point3 back_project(const Pixel3& p, const ViewPose& pose, const Intrinsics& k);

/// Projects a world point into the view. The returned depth is the
/// camera-space z. Returns nullopt when the point is behind a perspective
/// camera (qz <= 0); the caller drops such points.
std::optional<Pixel3> project(const Point3& point, const ViewPose& pose, const Intrinsics& k);

/// Pose looking from `center` toward `target`, camera +z along the view
/// direction. `up` fixes the image orientation; if it is (near) collinear
/// with the view direction, world +x is used instead.
ViewPose look_at_pose(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                      const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

/// Eight views on the corners of a cube inscribed in a sphere of radius
/// `distance`, all looking at the origin. Corner order is lexicographic over
/// the sign triples (-,-,-), (-,-,+), ..., (+,+,+).
CameraRig cube_corner_rig(double distance, int height, int width, const Intrinsics& k);

}  // namespace mvdc
