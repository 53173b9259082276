#include "mvdc/experiments.hpp"

#include "mvdc/io.hpp"
#include "mvdc/metrics.hpp"
#include "mvdc/parallel.hpp"

#include <cstdio>
#include <fstream>

namespace mvdc {

namespace {

std::string format_setting_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Intrinsics default_intrinsics(int resolution) {
    Intrinsics k;
    k.fx = k.fy = static_cast<double>(resolution);
    k.cx = k.cy = (resolution - 1) / 2.0;
    return k;
}

CameraRig default_rig(int resolution, double distance) {
    return cube_corner_rig(distance, resolution, resolution, default_intrinsics(resolution));
}

Benchmark make_perturbed_sphere(const BenchmarkSpec& spec) {
    Benchmark bench;
    bench.rig = default_rig(spec.resolution, spec.rig_distance);
    SceneSpec scene;
    scene.shape = ShapeSpec::sphere(1.0);
    scene.samples = spec.samples;
    scene.hole_fraction = spec.hole_fraction;
    scene.noise_sigma_frac = spec.noise_sigma_frac;
    scene.seed = spec.seed;
    bench.scene = make_scene(scene, bench.rig);
    return bench;
}

double mean_pairwise_distance(const std::vector<DepthImage>& views,
                              const std::vector<DepthImage>& inputs, const CameraRig& rig,
                              ConsistencyConfig cfg, int threads) {
    if (cfg.depth_range.extent() <= 0.0) cfg.depth_range = foreground_depth_range(views);
    const int n = rig.size();
    std::vector<double> sums(static_cast<size_t>(n) * n, 0.0);
    std::vector<size_t> counts(static_cast<size_t>(n) * n, 0);
    parallel_for(n * n, threads, [&](int pair) {
        const ConsistencyDistanceMap d =
            pairwise_distance(pair % n, pair / n, views, inputs, rig, cfg);
        double sum = 0.0;
        size_t count = 0;
        for (double v : d.values) {
            if (v >= 0.0) {
                sum += v;
                ++count;
            }
        }
        sums[pair] = sum;
        counts[pair] = count;
    });
    double sum = 0.0;
    size_t count = 0;
    for (int i = 0; i < n * n; ++i) {
        sum += sums[i];
        count += counts[i];
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

namespace {

struct GridRow {
    std::string grid;
    std::string setting;
    uint64_t seed = 0;
    double initial_consistency = 0.0;
    double final_consistency = 0.0;
    double initial_cd = 0.0;
    double final_cd = 0.0;
    double mean_pairwise = 0.0;
};

GridRow run_setting(const std::string& grid, const std::string& setting, const Benchmark& bench,
                    const EnergyConfig& cfg, DepthImage* final_view0) {
    GridRow row;
    row.grid = grid;
    row.setting = setting;
    row.seed = bench.scene.spec.seed;

    ConsistencyConfig metric_cfg = cfg.consistency;
    row.mean_pairwise = mean_pairwise_distance(bench.scene.degraded_views,
                                               bench.scene.input_views, bench.rig, metric_cfg,
                                               cfg.threads);

    const EnergyReport report = direct_optimize(bench.scene.degraded_views,
                                                bench.scene.input_views, bench.rig, cfg);
    row.initial_consistency = report.initial_consistency();
    row.final_consistency = report.selected_consistency();
    row.initial_cd =
        chamfer_distance(fuse_views(bench.scene.degraded_views, bench.rig), bench.scene.gt_cloud);
    row.final_cd = chamfer_distance(fuse_views(report.final_views, bench.rig), bench.scene.gt_cloud);
    if (final_view0) *final_view0 = report.final_views[0];
    return row;
}

}  // namespace

void run_ablate(const AblateOptions& options) {
    std::filesystem::create_directories(options.out);

    const bool all = options.grid == "all";
    std::vector<GridRow> rows;
    std::vector<std::pair<std::string, std::vector<DepthImage>>> first_seed_views;

    for (int s = 0; s < options.seeds; ++s) {
        BenchmarkSpec bench_spec = options.bench;
        bench_spec.seed = options.bench.seed + static_cast<uint64_t>(s);
        const Benchmark bench = make_perturbed_sphere(bench_spec);

        auto record = [&](const std::string& grid, const std::string& setting,
                          const EnergyConfig& cfg) {
            DepthImage final_view0;
            rows.push_back(run_setting(grid, setting, bench, cfg, s == 0 ? &final_view0 : nullptr));
            if (s == 0) {
                first_seed_views.emplace_back(grid + "_" + setting,
                                              std::vector<DepthImage>{std::move(final_view0)});
            }
        };

        if (all || options.grid == "mu") {
            for (const NormKind norm : {NormKind::kL1, NormKind::kL2}) {
                for (const double mu : {0.0, 0.1, 1.0, 2.0, 5.0, 10.0}) {
                    EnergyConfig cfg = options.base;
                    cfg.gen_norm = norm;
                    cfg.mu = mu;
                    record("mu",
                           std::string(norm == NormKind::kL1 ? "l1" : "l2") + "_mu" +
                               format_setting_value(mu),
                           cfg);
                }
            }
        }
        if (all || options.grid == "u") {
            for (const int u : {1, 3, 5}) {
                EnergyConfig cfg = options.base;
                cfg.consistency.u_factor = u;
                record("u", "u" + std::to_string(u), cfg);
            }
        }
        if (all || options.grid == "j") {
            for (const int j : {3, 5, 8}) {
                EnergyConfig cfg = options.base;
                cfg.consistency.j_views = j;
                record("j", "j" + std::to_string(j), cfg);
            }
        }
    }

    std::ofstream csv(options.out / "ablate.csv", std::ios::binary | std::ios::trunc);
    csv << "grid,setting,seed,initial_consistency,final_consistency,initial_cd,final_cd,"
           "mean_pairwise_distance\n";
    for (const GridRow& row : rows) {
        csv << row.grid << ',' << row.setting << ',' << row.seed << ','
            << csv_number(row.initial_consistency) << ',' << csv_number(row.final_consistency)
            << ',' << csv_number(row.initial_cd) << ',' << csv_number(row.final_cd) << ','
            << csv_number(row.mean_pairwise) << '\n';
    }
    csv.close();

    for (const auto& [name, views] : first_seed_views) {
        io::write_pfm(views[0], options.out / ("final_" + name + "_view0.pfm"));
    }
}

}  // namespace mvdc
