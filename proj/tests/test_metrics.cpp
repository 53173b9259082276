#include "mvdc/metrics.hpp"

#include "mvdc/experiments.hpp"
#include "mvdc/raster.hpp"
#include "mvdc/synth.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace mvdc;
using namespace mvdc::testing;

namespace {

PointCloud random_cloud(CounterRng& rng, int count, double extent = 1.0) {
    PointCloud cloud;
    for (int i = 0; i < count; ++i) {
        cloud.points.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                                  rng.uniform(-extent, extent));
    }
    return cloud;
}

double brute_force_chamfer(const PointCloud& a, const PointCloud& b) {
    auto one_sided = [](const PointCloud& from, const PointCloud& to) {
        double sum = 0.0;
        for (const Point3& p : from.points) {
            double best = 1e300;
            for (const Point3& q : to.points) best = std::min(best, (p - q).norm());
            sum += best;
        }
        return sum / static_cast<double>(from.points.size());
    };
    return one_sided(a, b) + one_sided(b, a);
}

}  // namespace

TEST_CASE("fuse_views: single foreground pixel") {
    const CameraRig rig = default_rig(16);
    std::vector<DepthImage> views(8, DepthImage(16, 16, 4.0));
    views[3].at(5, 9) = 1.7;

    const PointCloud cloud = fuse_views(views, rig);
    REQUIRE(cloud.size() == 1);
    const Point3 expected =
        back_project({5.0, 9.0, 1.7}, rig.views[3].pose, rig.views[3].intrinsics);
    CHECK(cloud.points[0].isApprox(expected, 1e-12));
}

TEST_CASE("fuse_views: point count conservation") {
    const CameraRig rig = default_rig(32);
    const std::vector<DepthImage> views = analytic_depth_views(ShapeSpec::sphere(1.0), rig, 4.0);
    const PointCloud cloud = fuse_views(views, rig);
    size_t expected = 0;
    for (const DepthImage& v : views) expected += v.foreground_count();
    CHECK(cloud.size() == expected);
}

TEST_CASE("fuse_views: fused sphere lies on the sphere") {
    const CameraRig rig = default_rig(64);
    const std::vector<DepthImage> views = analytic_depth_views(ShapeSpec::sphere(1.0), rig, 4.0);
    const PointCloud cloud = fuse_views(views, rig);
    size_t within = 0;
    for (const Point3& p : cloud.points) {
        if (std::abs(p.norm() - 1.0) <= 0.01) ++within;
    }
    CHECK(static_cast<double>(within) / cloud.size() >= 0.99);
}

TEST_CASE("chamfer_distance: hand-checked values") {
    PointCloud a, b;
    a.points = {Point3(0, 0, 0)};
    b.points = {Point3(1, 0, 0)};
    CHECK(chamfer_distance(a, b) == doctest::Approx(2.0));
    CHECK(chamfer_distance(a, a) == 0.0);
    CHECK(chamfer_distance(a, b, true) == doctest::Approx(2.0));  // squared, same at unit distance
}

TEST_CASE("chamfer_distance: empty cloud is a domain error") {
    PointCloud a, empty;
    a.points = {Point3(0, 0, 0)};
    CHECK_THROWS_AS(chamfer_distance(a, empty), std::domain_error);
}

TEST_CASE("chamfer_distance: accelerated result equals brute force") {
    CounterRng rng(91);
    for (int round = 0; round < 10; ++round) {
        const PointCloud a = random_cloud(rng, 100);
        const PointCloud b = random_cloud(rng, 80);
        CHECK(std::abs(chamfer_distance(a, b) - brute_force_chamfer(a, b)) < 1e-9);
    }
}

TEST_CASE("chamfer_distance: symmetric and monotone under unions") {
    CounterRng rng(92);
    const PointCloud a = random_cloud(rng, 60);
    const PointCloud b = random_cloud(rng, 70);
    CHECK(chamfer_distance(a, b) == chamfer_distance(b, a));

    PointCloud a_union_b = a;
    a_union_b.points.insert(a_union_b.points.end(), b.points.begin(), b.points.end());
    CHECK(chamfer_distance(a, a_union_b) <= chamfer_distance(a, b));
}

TEST_CASE("chamfer_distance: fusion/render duality bound") {
    const CameraRig rig = default_rig(128);
    CounterRng rng(93);
    PointCloud cloud;
    cloud.points = sample_surface(ShapeSpec::sphere(0.9), 50000, rng);

    std::vector<DepthImage> views;
    for (const View& view : rig.views) {
        views.push_back(render_depth(cloud.points, view.pose, view.intrinsics, rig.height,
                                     rig.width, 4.0));
    }
    const PointCloud fused = fuse_views(views, rig);
    const double fx = rig.views[0].intrinsics.fx;
    const double max_depth = foreground_depth_range(views).max;
    const double bound = 2.0 * std::sqrt(2.0) * max_depth / fx;
    CHECK(chamfer_distance(fused, cloud) <= bound);
}

TEST_CASE("gt_view_distance: shares the generator-loss definition") {
    const CameraRig rig = default_rig(24);
    const Benchmark bench = make_perturbed_sphere({24, 2.0, 5000, 0.2, 0.02, 94});
    CHECK(gt_view_distance(bench.scene.degraded_views, bench.scene.gt_views, NormKind::kL1) ==
          generator_loss(bench.scene.degraded_views, bench.scene.gt_views, NormKind::kL1));
    CHECK(gt_view_distance(bench.scene.degraded_views, bench.scene.gt_views, NormKind::kL2) ==
          generator_loss(bench.scene.degraded_views, bench.scene.gt_views, NormKind::kL2));
    CHECK(gt_view_distance(bench.scene.gt_views, bench.scene.gt_views, NormKind::kL2) == 0.0);
    (void)rig;
}

TEST_CASE("estimate_normals: planar patch") {
    const CameraRig rig = default_rig(16);
    PointCloud cloud;
    for (int i = -6; i <= 6; ++i) {
        for (int j = -6; j <= 6; ++j) {
            cloud.points.emplace_back(0.08 * i, 0.08 * j, 0.0);
        }
    }
    const PointCloud with_normals = estimate_normals(cloud, rig, 0.5, 30);
    REQUIRE(with_normals.normals.size() == cloud.size());
    for (const Eigen::Vector3d& n : with_normals.normals) {
        CHECK(std::abs(std::abs(n.z()) - 1.0) < 1e-6);
    }
}

TEST_CASE("estimate_normals: sphere normals are radial") {
    const CameraRig rig = default_rig(16);
    CounterRng rng(95);
    PointCloud cloud;
    cloud.points = sample_surface(ShapeSpec::sphere(1.0), 5000, rng);
    const PointCloud with_normals = estimate_normals(cloud, rig, 0.5, 30);

    size_t within = 0;
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Eigen::Vector3d radial = cloud.points[i].normalized();
        const double cosine = with_normals.normals[i].dot(radial);
        if (std::acos(std::clamp(cosine, -1.0, 1.0)) <= 5.0 * 3.14159265 / 180.0) ++within;
    }
    CHECK(static_cast<double>(within) / cloud.size() >= 0.95);
}

TEST_CASE("estimate_normals: isolated point is flagged degenerate") {
    const CameraRig rig = default_rig(16);
    PointCloud cloud;
    cloud.points = {Point3(0, 0, 0), Point3(5, 5, 5)};
    const PointCloud with_normals = estimate_normals(cloud, rig, 0.5, 30);
    CHECK(with_normals.normals[0].norm() == 0.0);
    CHECK(with_normals.normals[1].norm() == 0.0);
}
