#include "mvdc/synth.hpp"

#include "mvdc/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvdc {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Smallest t > 0 with origin + t * dir on the sphere, or 0 on a miss.
double ray_sphere(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double radius,
                  const Eigen::Vector3d& center) {
    const Eigen::Vector3d oc = origin - center;
    const double a = dir.squaredNorm();
    const double b = dir.dot(oc);
    const double c = oc.squaredNorm() - radius * radius;
    const double disc = b * b - a * c;
    if (disc < 0.0) return 0.0;
    const double sq = std::sqrt(disc);
    const double t0 = (-b - sq) / a;
    if (t0 > 0.0) return t0;
    const double t1 = (-b + sq) / a;
    return t1 > 0.0 ? t1 : 0.0;
}

/// Slab test against an axis-aligned box; entry point only.
double ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
               const Eigen::Vector3d& extents, const Eigen::Vector3d& center) {
    const Eigen::Vector3d half = 0.5 * extents;
    double tmin = -1e300, tmax = 1e300;
    for (int axis = 0; axis < 3; ++axis) {
        const double o = origin[axis] - center[axis];
        if (std::abs(dir[axis]) < 1e-300) {
            if (std::abs(o) > half[axis]) return 0.0;
            continue;
        }
        double t0 = (-half[axis] - o) / dir[axis];
        double t1 = (half[axis] - o) / dir[axis];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return 0.0;
    }
    return tmin > 0.0 ? tmin : 0.0;
}

/// Pixel ray in world coordinates, parameterized so camera depth equals t.
void pixel_ray(const View& view, double u, double v, Eigen::Vector3d& origin,
               Eigen::Vector3d& dir) {
    const Intrinsics& k = view.intrinsics;
    const Eigen::Matrix3d rt = view.pose.rotation.transpose();
    if (k.model == CameraModel::kPerspective) {
        origin = view.pose.center();
        dir = rt * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
    } else {
        origin = rt * (Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 0.0) -
                       view.pose.translation);
        dir = rt * Eigen::Vector3d::UnitZ();
    }
}

}  // namespace

double ShapePart::surface_area() const {
    if (kind == Kind::kSphere) return 4.0 * kPi * radius * radius;
    return 2.0 * (extents.x() * extents.y() + extents.y() * extents.z() +
                  extents.z() * extents.x());
}

ShapeSpec ShapeSpec::sphere(double radius, const Eigen::Vector3d& center) {
    ShapePart part;
    part.kind = ShapePart::Kind::kSphere;
    part.radius = radius;
    part.center = center;
    return {{part}};
}

ShapeSpec ShapeSpec::box(const Eigen::Vector3d& extents, const Eigen::Vector3d& center) {
    ShapePart part;
    part.kind = ShapePart::Kind::kBox;
    part.extents = extents;
    part.center = center;
    return {{part}};
}

double analytic_depth(const ShapeSpec& shape, const View& view, double u, double v) {
    Eigen::Vector3d origin, dir;
    pixel_ray(view, u, v, origin, dir);
    double best = 0.0;
    for (const ShapePart& part : shape.parts) {
        const double t = part.kind == ShapePart::Kind::kSphere
                             ? ray_sphere(origin, dir, part.radius, part.center)
                             : ray_box(origin, dir, part.extents, part.center);
        if (t > 0.0 && (best == 0.0 || t < best)) best = t;
    }
    return best;
}

std::vector<DepthImage> analytic_depth_views(const ShapeSpec& shape, const CameraRig& rig,
                                             double background_depth) {
    std::vector<DepthImage> views;
    views.reserve(rig.views.size());
    for (const View& view : rig.views) {
        DepthImage image(rig.width, rig.height, background_depth);
        for (int y = 0; y < rig.height; ++y) {
            for (int x = 0; x < rig.width; ++x) {
                const double d = analytic_depth(shape, view, x, y);
                if (d > 0.0 && d < background_depth - kForegroundMargin) image.at(x, y) = d;
            }
        }
        views.push_back(std::move(image));
    }
    return views;
}

std::vector<Point3> sample_surface(const ShapeSpec& shape, int count, CounterRng& rng) {
    if (shape.parts.empty()) throw std::invalid_argument("sample_surface: empty shape");
    std::vector<double> cumulative;
    double total = 0.0;
    for (const ShapePart& part : shape.parts) {
        total += part.surface_area();
        cumulative.push_back(total);
    }

    std::vector<Point3> points;
    points.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double pick = rng.next_double() * total;
        size_t part_index = 0;
        while (part_index + 1 < cumulative.size() && pick >= cumulative[part_index]) ++part_index;
        const ShapePart& part = shape.parts[part_index];

        if (part.kind == ShapePart::Kind::kSphere) {
            const double z = 1.0 - 2.0 * rng.next_double();
            const double phi = 2.0 * kPi * rng.next_double();
            const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            points.push_back(part.center +
                             part.radius * Eigen::Vector3d(s * std::cos(phi), s * std::sin(phi), z));
        } else {
            const Eigen::Vector3d& e = part.extents;
            const double areas[3] = {e.y() * e.z(), e.z() * e.x(), e.x() * e.y()};
            const double face_total = 2.0 * (areas[0] + areas[1] + areas[2]);
            double f = rng.next_double() * face_total;
            int axis = 0;
            double side = 1.0;
            for (axis = 0; axis < 3; ++axis) {
                if (f < areas[axis]) { side = -1.0; break; }
                f -= areas[axis];
                if (f < areas[axis]) { side = 1.0; break; }
                f -= areas[axis];
            }
            if (axis == 3) { axis = 2; side = 1.0; }
            Eigen::Vector3d p;
            p[axis] = side * 0.5 * e[axis];
            const int a1 = (axis + 1) % 3;
            const int a2 = (axis + 2) % 3;
            p[a1] = (rng.next_double() - 0.5) * e[a1];
            p[a2] = (rng.next_double() - 0.5) * e[a2];
            points.push_back(part.center + p);
        }
    }
    return points;
}

std::vector<Point3> fibonacci_sphere(int count, double radius) {
    std::vector<Point3> points;
    points.reserve(count);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = count == 1 ? 0.0 : 1.0 - 2.0 * i / static_cast<double>(count - 1);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        points.emplace_back(radius * r * std::cos(phi), radius * r * std::sin(phi), radius * z);
    }
    return points;
}

namespace {

/// Removes exactly `target` foreground pixels as disk-shaped blobs
/// (nearest-first partial disk on the final draw, so the count is exact).
void carve_holes(DepthImage& view, long long target, double max_radius, CounterRng& rng) {
    long long removed = 0;
    int guard = 0;
    while (removed < target && guard++ < 100000) {
        // Pick a surviving foreground pixel as the disk center.
        const int fg = view.foreground_count();
        if (fg == 0) break;
        long long pick = static_cast<long long>(rng.below(static_cast<uint64_t>(fg)));
        int cx = -1, cy = -1;
        for (int y = 0; y < view.height && cx < 0; ++y) {
            for (int x = 0; x < view.width; ++x) {
                if (!view.is_foreground(x, y)) continue;
                if (pick-- == 0) {
                    cx = x;
                    cy = y;
                    break;
                }
            }
        }
        const double radius = rng.uniform(1.5, max_radius);

        // Gather disk pixels nearest-first so a truncated disk stays compact.
        std::vector<std::pair<double, int>> disk;
        const int r = static_cast<int>(std::ceil(radius));
        for (int y = std::max(0, cy - r); y <= std::min(view.height - 1, cy + r); ++y) {
            for (int x = std::max(0, cx - r); x <= std::min(view.width - 1, cx + r); ++x) {
                const double d2 = static_cast<double>(x - cx) * (x - cx) +
                                  static_cast<double>(y - cy) * (y - cy);
                if (d2 > radius * radius) continue;
                if (!view.is_foreground(x, y)) continue;
                disk.push_back({d2, y * view.width + x});
            }
        }
        std::sort(disk.begin(), disk.end());
        for (const auto& [d2, index] : disk) {
            if (removed >= target) break;
            view.data[index] = view.background_depth;
            ++removed;
        }
    }
}

}  // namespace

SyntheticScene make_scene(const SceneSpec& spec, const CameraRig& rig) {
    if (spec.hole_fraction < 0.0 || spec.hole_fraction > 0.9) {
        throw std::domain_error("make_scene: hole fraction must be in [0, 0.9]");
    }
    if (spec.samples < 1) throw std::invalid_argument("make_scene: samples must be >= 1");

    SyntheticScene scene;
    scene.spec = spec;
    CounterRng rng(spec.seed);

    scene.gt_cloud.points = sample_surface(spec.shape, spec.samples, rng);
    if (spec.raster_ground_truth) {
        scene.gt_views.reserve(rig.views.size());
        for (const View& view : rig.views) {
            scene.gt_views.push_back(render_depth(scene.gt_cloud.points, view.pose,
                                                  view.intrinsics, rig.height, rig.width,
                                                  spec.background_depth));
        }
    } else {
        scene.gt_views = analytic_depth_views(spec.shape, rig, spec.background_depth);
    }
    scene.depth_range = foreground_depth_range(scene.gt_views);

    scene.input_views = scene.gt_views;
    if (spec.hole_fraction > 0.0) {
        const double max_radius = std::max(3.0, rig.width / 16.0);
        for (DepthImage& view : scene.input_views) {
            const long long target =
                std::llround(spec.hole_fraction * view.foreground_count());
            carve_holes(view, target, max_radius, rng);
        }
    }

    scene.degraded_views = scene.gt_views;
    if (spec.noise_sigma_frac > 0.0) {
        const double sigma = spec.noise_sigma_frac * scene.depth_range.extent();
        for (DepthImage& view : scene.degraded_views) {
            for (int y = 0; y < view.height; ++y) {
                for (int x = 0; x < view.width; ++x) {
                    if (!view.is_foreground(x, y)) continue;
                    const double noisy = view.at(x, y) + sigma * rng.gaussian();
                    view.at(x, y) = std::clamp(noisy, 2.0 * kForegroundMargin,
                                               view.background_depth - 2.0 * kForegroundMargin);
                }
            }
        }
    }
    return scene;
}

}  // namespace mvdc
