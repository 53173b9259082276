#pragma once

#include "mvdc/camera.hpp"
#include "mvdc/depth_image.hpp"
#include "mvdc/metrics.hpp"
#include "mvdc/rng.hpp"

#include <cstdint>
#include <vector>

namespace mvdc {

struct ShapePart {
    enum class Kind { kSphere, kBox };
    Kind kind = Kind::kSphere;
    double radius = 1.0;                                  // sphere
    Eigen::Vector3d extents = Eigen::Vector3d::Ones();    // box, full extents
    Eigen::Vector3d center = Eigen::Vector3d::Zero();

    double surface_area() const;
};

/// A shape is a union of primitives; sampling concatenates per-part samples
/// (area-weighted), analytic depth takes the nearest hit over parts.
struct ShapeSpec {
    std::vector<ShapePart> parts;

    static ShapeSpec sphere(double radius, const Eigen::Vector3d& center = Eigen::Vector3d::Zero());
    static ShapeSpec box(const Eigen::Vector3d& extents,
                         const Eigen::Vector3d& center = Eigen::Vector3d::Zero());
};

struct SceneSpec {
    ShapeSpec shape = ShapeSpec::sphere(1.0);
    int samples = 200000;
    double hole_fraction = 0.0;      // foreground fraction carved out of the inputs
    double noise_sigma_frac = 0.0;   // Gaussian sigma as a fraction of the depth range
    uint64_t seed = 0;
    double background_depth = 4.0;
    bool raster_ground_truth = false;  // splat the sampled cloud instead of ray casting
};

struct SyntheticScene {
    SceneSpec spec;
    PointCloud gt_cloud;
    std::vector<DepthImage> gt_views;
    std::vector<DepthImage> input_views;     // ground truth with holes
    std::vector<DepthImage> degraded_views;  // ground truth with depth noise
    DepthRange depth_range;                  // over gt_views foreground
};

/// Camera depth of the nearest ray-shape intersection through pixel (u, v),
/// or 0 when the ray misses.
double analytic_depth(const ShapeSpec& shape, const View& view, double u, double v);

/// Per-pixel ray-cast depth images for every rig view.
std::vector<DepthImage> analytic_depth_views(const ShapeSpec& shape, const CameraRig& rig,
                                             double background_depth);

/// Area-weighted uniform surface samples, deterministic in the rng stream.
std::vector<Point3> sample_surface(const ShapeSpec& shape, int count, CounterRng& rng);

/// Evenly spread points on a sphere (golden-angle spiral); deterministic.
std::vector<Point3> fibonacci_sphere(int count, double radius);

/// Samples the surface, renders ground-truth views, carves disk-shaped holes
/// into the inputs (hitting the requested fraction exactly, to the pixel),
/// and perturbs foreground depths to form the degraded views.
/// Throws std::domain_error for hole fractions above 0.9.
SyntheticScene make_scene(const SceneSpec& spec, const CameraRig& rig);

}  // namespace mvdc
