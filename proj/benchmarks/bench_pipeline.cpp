#include "mvdc/experiments.hpp"
#include "mvdc/metrics.hpp"

#include <benchmark/benchmark.h>

using namespace mvdc;

namespace {

const Benchmark& scene128() {
    static const Benchmark bench = make_perturbed_sphere({128, 2.4, 80000, 0.3, 0.01, 1});
    return bench;
}

void BM_render_depth(benchmark::State& state) {
    const Benchmark& bench = scene128();
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_depth(bench.scene.gt_cloud.points,
                                              bench.rig.views[0].pose,
                                              bench.rig.views[0].intrinsics, bench.rig.height,
                                              bench.rig.width, 4.0));
    }
}
BENCHMARK(BM_render_depth);

void BM_reproject_view(benchmark::State& state) {
    const Benchmark& bench = scene128();
    const int u = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(reproject_view(bench.scene.gt_views[0], bench.rig.views[0],
                                                bench.rig.views[1], u));
    }
}
BENCHMARK(BM_reproject_view)->Arg(1)->Arg(3)->Arg(5);

void BM_closest_point_pooling(benchmark::State& state) {
    const Benchmark& bench = scene128();
    const ReprojectionBuffer buffer =
        reproject_view(bench.scene.gt_views[0], bench.rig.views[0], bench.rig.views[1], 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(closest_point_pooling(buffer, bench.scene.gt_views[1]));
    }
}
BENCHMARK(BM_closest_point_pooling);

void BM_consistency_forward(benchmark::State& state) {
    const Benchmark& bench = scene128();
    ConsistencyConfig cfg;
    cfg.depth_range = bench.scene.depth_range;
    for (auto _ : state) {
        benchmark::DoNotOptimize(consistency_forward(bench.scene.degraded_views,
                                                     bench.scene.input_views, bench.rig, cfg));
    }
}
BENCHMARK(BM_consistency_forward);

void BM_chamfer_distance(benchmark::State& state) {
    const Benchmark& bench = scene128();
    const PointCloud fused = fuse_views(bench.scene.gt_views, bench.rig);
    for (auto _ : state) {
        benchmark::DoNotOptimize(chamfer_distance(fused, bench.scene.gt_cloud));
    }
}
BENCHMARK(BM_chamfer_distance);

}  // namespace

BENCHMARK_MAIN();
