#include "mvdc/experiments.hpp"
#include "mvdc/io.hpp"
#include "mvdc/metrics.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

namespace fs = std::filesystem;
using namespace mvdc;

namespace {

std::string index_name(const char* prefix, int index, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%02d%s", prefix, index, suffix);
    return buf;
}

struct Options {
    fs::path out;
    fs::path config;
    fs::path scene_path;
    fs::path rig_path;
    fs::path generator_path;
    fs::path scene_dir;
    fs::path cloud_a, cloud_b;
    std::string use = "gt";
    std::string grid = "all";
    std::string norm = "l2";
    std::string grad_scale;
    uint64_t seed = 0;
    int views = 8;
    std::vector<int> res = {256, 256};
    double distance = 2.4;
    int u_factor = 5;
    int j_views = 8;
    double mu = 1.0;
    int steps = 100;
    double lr = 0.0;
    int select_window = 10;
    double threshold_frac = 0.025;
    int threads = 1;
    int samples = 200000;
    double hole_fraction = 0.3;
    double noise_frac = 0.01;
    double background = 4.0;
    int seeds = 1;
    int source = 0, target = 1;
    bool squared = false;
    bool dump_lossmaps = false;
    bool with_normals = false;
    int dump_every = 0;
    bool binary_ply = false;
    bool backtracking = false;
    double momentum = 0.0;
};

CameraRig build_rig(const Options& opt) {
    CameraRig rig;
    if (!opt.rig_path.empty()) {
        rig = io::read_rig(opt.rig_path);
    } else {
        rig = default_rig(std::max(opt.res[0], opt.res[1]), opt.distance);
        rig.height = opt.res[0];
        rig.width = opt.res[1];
        Intrinsics k;
        k.fx = k.fy = static_cast<double>(std::max(opt.res[0], opt.res[1]));
        k.cx = (opt.res[1] - 1) / 2.0;
        k.cy = (opt.res[0] - 1) / 2.0;
        for (View& view : rig.views) view.intrinsics = k;
    }
    if (opt.views < 2 || opt.views > rig.size()) {
        throw std::invalid_argument("--views must be in [2, " + std::to_string(rig.size()) + "]");
    }
    rig.views.resize(opt.views);
    return rig;
}

SceneSpec build_scene_spec(const Options& opt, const CLI::App* cmd) {
    SceneSpec spec;
    if (!opt.scene_path.empty()) spec = io::read_scene_spec(opt.scene_path);
    if (cmd->count("--samples")) spec.samples = opt.samples;
    if (cmd->count("--hole-fraction")) spec.hole_fraction = opt.hole_fraction;
    if (cmd->count("--noise-frac")) spec.noise_sigma_frac = opt.noise_frac;
    if (cmd->count("--seed")) spec.seed = opt.seed;
    if (cmd->count("--background")) spec.background_depth = opt.background;
    return spec;
}

EnergyConfig build_energy_config(const Options& opt, const CLI::App* cmd, bool descriptor_mode) {
    EnergyConfig cfg =
        descriptor_mode ? EnergyConfig::descriptor_defaults() : EnergyConfig::direct_defaults();
    if (!opt.config.empty()) cfg = io::read_energy_config(opt.config);
    if (cmd->count("--mu")) cfg.mu = opt.mu;
    if (cmd->count("--norm")) cfg.gen_norm = opt.norm == "l1" ? NormKind::kL1 : NormKind::kL2;
    if (cmd->count("--steps")) cfg.steps = opt.steps;
    if (cmd->count("--lr")) cfg.learning_rate = opt.lr;
    if (cmd->count("--select-window")) cfg.select_window = opt.select_window;
    if (cmd->count("--u-factor")) cfg.consistency.u_factor = opt.u_factor;
    if (cmd->count("--j-views")) cfg.consistency.j_views = opt.j_views;
    if (cmd->count("--threshold-frac")) cfg.consistency.outlier_fraction = opt.threshold_frac;
    if (cmd->count("--grad-scale")) {
        cfg.grad_scale =
            opt.grad_scale == "view_sum" ? GradScale::kViewSum : GradScale::kMean;
    }
    if (cmd->count("--backtracking")) cfg.backtracking = opt.backtracking;
    if (cmd->count("--momentum")) cfg.momentum = opt.momentum;
    cfg.threads = opt.threads;
    cfg.consistency.j_views = std::min(cfg.consistency.j_views, opt.views);
    return cfg;
}

void write_views(const std::vector<DepthImage>& views, const fs::path& dir, const char* prefix) {
    for (size_t n = 0; n < views.size(); ++n) {
        io::write_pfm(views[n], dir / index_name(prefix, static_cast<int>(n), ".pfm"));
    }
}

std::vector<DepthImage> read_views(const fs::path& dir, const char* prefix, int count,
                                   double background) {
    std::vector<DepthImage> views;
    for (int n = 0; n < count; ++n) {
        views.push_back(io::read_pfm(dir / index_name(prefix, n, ".pfm"), background));
    }
    return views;
}

DepthImage flatten_buffer(const ReprojectionBuffer& buffer) {
    const int u = buffer.u_factor;
    DepthImage flat(buffer.width * u, buffer.height * u, 0.0);
    for (int y = 0; y < buffer.height; ++y) {
        for (int x = 0; x < buffer.width; ++x) {
            for (int sy = 0; sy < u; ++sy) {
                for (int sx = 0; sx < u; ++sx) {
                    const BufferCell& cell = buffer.cell(x, y, sx, sy);
                    flat.at(x * u + sx, y * u + sy) = cell.present() ? cell.depth : 0.0;
                }
            }
        }
    }
    return flat;
}

void export_loss_maps(const std::vector<LossMap>& maps, double full_scale, const fs::path& dir) {
    fs::create_directories(dir);
    for (size_t t = 0; t < maps.size(); ++t) {
        io::write_loss_pgm8(maps[t], dir / index_name("lossmap_", static_cast<int>(t), ".pgm"),
                            full_scale);
        DepthImage raw(maps[t].width, maps[t].height, 0.0);
        raw.data = maps[t].values;
        io::write_pfm(raw, dir / index_name("lossmap_", static_cast<int>(t), ".pfm"));
    }
}

int run_synth(const Options& opt, const SceneSpec& spec) {
    const CameraRig rig = build_rig(opt);
    const SyntheticScene scene = make_scene(spec, rig);
    fs::create_directories(opt.out);
    io::write_rig(rig, opt.out / "rig.json");
    io::write_scene_spec(spec, opt.out / "scene.json");
    io::write_ply(scene.gt_cloud, opt.out / "gt_cloud.ply", opt.binary_ply);
    write_views(scene.gt_views, opt.out, "gt_view_");
    write_views(scene.input_views, opt.out, "input_view_");
    write_views(scene.degraded_views, opt.out, "init_view_");
    return 0;
}

struct LoadedScene {
    CameraRig rig;
    SyntheticScene scene;
};

/// Scene inputs either regenerated from a spec or read back from a synth
/// output directory.
LoadedScene load_scene(const Options& opt, const CLI::App* cmd) {
    LoadedScene loaded;
    if (!opt.scene_dir.empty()) {
        loaded.rig = io::read_rig(opt.scene_dir / "rig.json");
        const SceneSpec spec = io::read_scene_spec(opt.scene_dir / "scene.json");
        loaded.scene.spec = spec;
        const int n = loaded.rig.size();
        loaded.scene.gt_views = read_views(opt.scene_dir, "gt_view_", n, spec.background_depth);
        loaded.scene.input_views =
            read_views(opt.scene_dir, "input_view_", n, spec.background_depth);
        loaded.scene.degraded_views =
            read_views(opt.scene_dir, "init_view_", n, spec.background_depth);
        loaded.scene.gt_cloud = io::read_ply(opt.scene_dir / "gt_cloud.ply");
        loaded.scene.depth_range = foreground_depth_range(loaded.scene.gt_views);
    } else {
        loaded.rig = build_rig(opt);
        loaded.scene = make_scene(build_scene_spec(opt, cmd), loaded.rig);
    }
    return loaded;
}

const std::vector<DepthImage>& pick_views(const SyntheticScene& scene, const std::string& use) {
    if (use == "gt") return scene.gt_views;
    if (use == "input") return scene.input_views;
    if (use == "init") return scene.degraded_views;
    throw std::invalid_argument("--use must be gt, input, or init");
}

int run_optimize(const Options& opt, const CLI::App* cmd, bool descriptor_mode) {
    const LoadedScene loaded = load_scene(opt, cmd);
    const EnergyConfig cfg = build_energy_config(opt, cmd, descriptor_mode);
    fs::create_directories(opt.out);

    StepObserver observer;
    double dump_scale = cfg.consistency.depth_range.extent() > 0.0
                            ? cfg.consistency.outlier_threshold()
                            : cfg.consistency.outlier_fraction * loaded.scene.depth_range.extent();
    if (opt.dump_every > 0) {
        observer = [&, dump_scale](int step, const ConsistencyTrace& trace) {
            char sub[32];
            std::snprintf(sub, sizeof(sub), "lossmaps_step_%04d", step);
            if (step % opt.dump_every == 0) {
                export_loss_maps(trace.loss_maps, dump_scale, opt.out / sub);
            }
        };
    }

    EnergyReport report;
    if (descriptor_mode) {
        io::RbfGeneratorSpec gen_spec;
        if (!opt.generator_path.empty()) gen_spec = io::read_generator_spec(opt.generator_path);
        const auto generator = io::build_rbf_generator(gen_spec, loaded.rig);
        const InitialDescriptor z0 = generator->initial_descriptor(loaded.scene.input_views);
        report = descriptor_optimize(*generator, z0.z, loaded.scene.input_views, loaded.rig, cfg,
                                     observer);
    } else {
        report = direct_optimize(loaded.scene.degraded_views, loaded.scene.input_views, loaded.rig,
                                 cfg, observer);
    }

    io::write_report(report, cfg, descriptor_mode ? "descriptor" : "direct",
                     opt.out / "report.json");
    write_views(report.final_views, opt.out, "final_view_");
    PointCloud fused = fuse_views(report.final_views, loaded.rig);
    if (opt.with_normals && !fused.points.empty()) {
        fused = estimate_normals(fused, loaded.rig);
    }
    io::write_ply(fused, opt.out / "fused.ply", opt.binary_ply);

    if (!loaded.scene.gt_cloud.points.empty() && !fused.points.empty()) {
        nlohmann::json metrics;
        metrics["schema_version"] = 1;
        metrics["final_cd"] = chamfer_distance(fused, loaded.scene.gt_cloud);
        const std::vector<DepthImage>& initial =
            descriptor_mode ? loaded.scene.input_views : loaded.scene.degraded_views;
        const PointCloud initial_fused = fuse_views(initial, loaded.rig);
        if (!initial_fused.points.empty()) {
            metrics["initial_cd"] = chamfer_distance(initial_fused, loaded.scene.gt_cloud);
        }
        std::ofstream(opt.out / "metrics.json") << metrics.dump(2) << "\n";
    }

    if (opt.dump_lossmaps) {
        ConsistencyConfig cc = cfg.consistency;
        if (cc.depth_range.extent() <= 0.0) {
            cc.depth_range = foreground_depth_range(report.final_views);
        }
        const auto [loss, maps] = consistency_loss(report.final_views, loaded.scene.input_views,
                                                   loaded.rig, cc, cfg.threads);
        export_loss_maps(maps, cc.outlier_threshold(), opt.out / "lossmaps");
    }
    if (report.diverged) {
        nlohmann::json diag{{"error", "optimization diverged"},
                            {"diverged_at_step", report.diverged_at_step}};
        std::cerr << diag.dump() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view consistent depth optimization"};
    app.require_subcommand(1);

    Options opt;
    std::function<int()> action;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", opt.out, "Output directory");
        cmd->add_option("--seed", opt.seed, "Scene seed");
        cmd->add_option("--views", opt.views, "Number of rig views (2-8)");
        cmd->add_option("--res", opt.res, "Resolution H W")->expected(2);
        cmd->add_option("--distance", opt.distance, "Rig distance from the origin");
        cmd->add_option("--threads", opt.threads, "Worker threads");
        cmd->add_option("--rig", opt.rig_path, "Rig JSON (overrides --res/--views/--distance)");
        return cmd;
    };
    auto add_energy = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config, "Energy config JSON");
        cmd->add_option("--u-factor", opt.u_factor, "Sub-pixel buffer size U");
        cmd->add_option("--j-views", opt.j_views, "Views pooled per target J");
        cmd->add_option("--mu", opt.mu, "Data-term weight");
        cmd->add_option("--norm", opt.norm, "Generator-loss norm (l1|l2)");
        cmd->add_option("--steps", opt.steps, "Gradient descent steps");
        cmd->add_option("--lr", opt.lr, "Learning rate");
        cmd->add_option("--select-window", opt.select_window, "Trailing selection window");
        cmd->add_option("--threshold-frac", opt.threshold_frac, "Outlier threshold fraction");
        cmd->add_option("--grad-scale", opt.grad_scale, "Step scale (mean|view_sum)");
        cmd->add_flag("--backtracking", opt.backtracking, "Halve steps on total-loss increase");
        cmd->add_option("--momentum", opt.momentum, "Momentum coefficient (0 disables)");
        return cmd;
    };
    auto add_scene = [&](CLI::App* cmd) {
        cmd->add_option("--scene", opt.scene_path, "Scene spec JSON");
        cmd->add_option("--scene-dir", opt.scene_dir, "Directory produced by `synth`");
        cmd->add_option("--samples", opt.samples, "Surface sample count");
        cmd->add_option("--hole-fraction", opt.hole_fraction, "Foreground fraction carved out");
        cmd->add_option("--noise-frac", opt.noise_frac, "Depth noise sigma / depth range");
        cmd->add_option("--background", opt.background, "Far-plane depth");
        return cmd;
    };

    // synth
    {
        CLI::App* cmd = add_scene(add_common(app.add_subcommand(
            "synth", "Generate a synthetic scene (views, inputs, ground truth)")));
        cmd->add_flag("--binary-ply", opt.binary_ply, "Write binary PLY");
        cmd->callback([&, cmd] {
            action = [&, cmd] { return run_synth(opt, build_scene_spec(opt, cmd)); };
        });
    }
    // render
    {
        CLI::App* cmd = add_common(
            app.add_subcommand("render", "Render a point cloud to the rig's depth views"));
        cmd->add_option("--cloud", opt.cloud_a, "Input PLY")->required();
        cmd->add_option("--background", opt.background, "Far-plane depth");
        cmd->callback([&] {
            action = [&] {
                const CameraRig rig = build_rig(opt);
                const PointCloud cloud = io::read_ply(opt.cloud_a);
                fs::create_directories(opt.out);
                std::vector<DepthImage> views;
                for (const View& view : rig.views) {
                    views.push_back(render_depth(cloud.points, view.pose, view.intrinsics,
                                                 rig.height, rig.width, opt.background));
                }
                write_views(views, opt.out, "view_");
                io::write_rig(rig, opt.out / "rig.json");
                return 0;
            };
        });
    }
    // reproject
    {
        CLI::App* cmd = add_scene(add_common(app.add_subcommand(
            "reproject", "Reproject one view into another's pseudo-rendering buffer")));
        cmd->add_option("--source", opt.source, "Source view index");
        cmd->add_option("--target", opt.target, "Target view index");
        cmd->add_option("--u-factor", opt.u_factor, "Sub-pixel buffer size U");
        cmd->add_option("--use", opt.use, "Which views to reproject (gt|input|init)");
        cmd->callback([&, cmd] {
            action = [&, cmd] {
                const LoadedScene loaded = load_scene(opt, cmd);
                const std::vector<DepthImage>& views = pick_views(loaded.scene, opt.use);
                const int n = loaded.rig.size();
                if (opt.source < 0 || opt.source >= n || opt.target < 0 || opt.target >= n) {
                    throw std::invalid_argument("view index out of range");
                }
                const ReprojectionBuffer buffer =
                    reproject_view(views[opt.source], loaded.rig.views[opt.source],
                                   loaded.rig.views[opt.target], opt.u_factor);
                fs::create_directories(opt.out);
                const std::string tag =
                    std::to_string(opt.source) + "_" + std::to_string(opt.target);
                io::write_pfm(flatten_buffer(buffer), opt.out / ("buffer_" + tag + ".pfm"));

                ConsistencyDistanceMap d = closest_point_pooling(buffer, views[opt.target]);
                DepthImage distances(d.width, d.height, 0.0);
                distances.data = d.values;  // excluded pixels stay at -1
                io::write_pfm(distances, opt.out / ("distance_" + tag + ".pfm"));
                return 0;
            };
        });
    }
    // lossmaps
    {
        CLI::App* cmd = add_energy(add_scene(add_common(
            app.add_subcommand("lossmaps", "Export per-view consistency loss maps"))));
        cmd->add_option("--use", opt.use, "Which views to evaluate (gt|input|init)");
        cmd->callback([&, cmd] {
            action = [&, cmd] {
                const LoadedScene loaded = load_scene(opt, cmd);
                const EnergyConfig cfg = build_energy_config(opt, cmd, false);
                ConsistencyConfig cc = cfg.consistency;
                const std::vector<DepthImage>& views = pick_views(loaded.scene, opt.use);
                if (cc.depth_range.extent() <= 0.0) cc.depth_range = loaded.scene.depth_range;
                const auto [loss, maps] = consistency_loss(views, loaded.scene.input_views,
                                                           loaded.rig, cc, cfg.threads);
                fs::create_directories(opt.out);
                export_loss_maps(maps, cc.outlier_threshold(), opt.out);
                nlohmann::json j{{"schema_version", 1},
                                 {"consistency_loss", loss},
                                 {"full_scale", cc.outlier_threshold()}};
                nlohmann::json means = nlohmann::json::array();
                for (const LossMap& m : maps) means.push_back(m.mean());
                j["per_view_mean"] = means;
                std::ofstream(opt.out / "lossmaps.json") << j.dump(2) << "\n";
                return 0;
            };
        });
    }
    // optimize-direct / optimize-descriptor
    {
        CLI::App* cmd = add_energy(add_scene(add_common(app.add_subcommand(
            "optimize-direct", "Gradient descent directly on the depth maps"))));
        cmd->add_flag("--dump-lossmaps", opt.dump_lossmaps, "Export final loss maps");
        cmd->add_option("--dump-lossmaps-every", opt.dump_every,
                        "Export loss maps every N steps during optimization");
        cmd->add_flag("--estimate-normals", opt.with_normals,
                      "Attach PCA normals to the fused cloud");
        cmd->callback([&, cmd] {
            action = [&, cmd] { return run_optimize(opt, cmd, false); };
        });
    }
    {
        CLI::App* cmd = add_energy(add_scene(add_common(app.add_subcommand(
            "optimize-descriptor", "Gradient descent on a shape descriptor"))));
        cmd->add_option("--generator", opt.generator_path, "Generator spec JSON");
        cmd->add_flag("--dump-lossmaps", opt.dump_lossmaps, "Export final loss maps");
        cmd->add_option("--dump-lossmaps-every", opt.dump_every,
                        "Export loss maps every N steps during optimization");
        cmd->add_flag("--estimate-normals", opt.with_normals,
                      "Attach PCA normals to the fused cloud");
        cmd->callback([&, cmd] {
            action = [&, cmd] { return run_optimize(opt, cmd, true); };
        });
    }
    // eval-cd
    {
        CLI::App* cmd = app.add_subcommand("eval-cd", "Chamfer distance between two PLY clouds");
        cmd->add_option("--a", opt.cloud_a, "First cloud")->required();
        cmd->add_option("--b", opt.cloud_b, "Second cloud")->required();
        cmd->add_option("--out", opt.out, "Optional output directory for cd.json");
        cmd->add_flag("--squared", opt.squared, "Use squared distances");
        cmd->callback([&] {
            action = [&] {
                const double cd = chamfer_distance(io::read_ply(opt.cloud_a),
                                                   io::read_ply(opt.cloud_b), opt.squared);
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.17g", cd);
                std::cout << buf << "\n";
                if (!opt.out.empty()) {
                    fs::create_directories(opt.out);
                    nlohmann::json j{{"schema_version", 1}, {"cd", cd}, {"squared", opt.squared}};
                    std::ofstream(opt.out / "cd.json") << j.dump(2) << "\n";
                }
                return 0;
            };
        });
    }
    // ablate
    {
        CLI::App* cmd = add_energy(add_common(
            app.add_subcommand("ablate", "Parameter grids on the perturbed-sphere benchmark")));
        cmd->add_option("--grid", opt.grid, "Grid to run (mu|u|j|all)");
        cmd->add_option("--seeds", opt.seeds, "Seeds per setting");
        cmd->add_option("--samples", opt.samples, "Surface sample count");
        cmd->add_option("--hole-fraction", opt.hole_fraction, "Foreground fraction carved out");
        cmd->add_option("--noise-frac", opt.noise_frac, "Depth noise sigma / depth range");
        cmd->callback([&, cmd] {
            action = [&, cmd] {
                AblateOptions ablate;
                ablate.grid = opt.grid;
                ablate.seeds = opt.seeds;
                ablate.bench.resolution = opt.res[0];
                ablate.bench.rig_distance = opt.distance;
                ablate.bench.samples = opt.samples;
                ablate.bench.hole_fraction = opt.hole_fraction;
                ablate.bench.noise_sigma_frac = opt.noise_frac;
                ablate.bench.seed = opt.seed;
                ablate.base = build_energy_config(opt, cmd, false);
                ablate.out = opt.out;
                run_ablate(ablate);
                return 0;
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        return action();
    } catch (const io::IoError& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
}
