#pragma once

#include "mvdc/energy.hpp"
#include "mvdc/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mvdc {

/// Canonical intrinsics for a square resolution: fx = fy = resolution,
/// principal point at the pixel-grid center.
Intrinsics default_intrinsics(int resolution);

/// Eight cube-corner views at the given distance with default intrinsics.
/// The default distance keeps a radius-1 shape inside every frustum.
CameraRig default_rig(int resolution, double distance = 2.4);

struct BenchmarkSpec {
    int resolution = 256;
    double rig_distance = 2.4;
    int samples = 200000;
    double hole_fraction = 0.3;
    double noise_sigma_frac = 0.01;  // sigma = 1% of the depth range
    uint64_t seed = 0;
};

struct Benchmark {
    CameraRig rig;
    SyntheticScene scene;
};

/// Unit sphere with noisy "completed" views and holey inputs; the standing
/// scene for the direct-optimization experiments.
Benchmark make_perturbed_sphere(const BenchmarkSpec& spec);

/// Mean over all present entries of all N^2 pairwise distance maps
/// (outlier suppression applied). The depth range is frozen from the views
/// when the config does not carry one.
double mean_pairwise_distance(const std::vector<DepthImage>& views,
                              const std::vector<DepthImage>& inputs, const CameraRig& rig,
                              ConsistencyConfig cfg, int threads = 1);

struct AblateOptions {
    std::string grid = "all";  // "mu", "u", "j", or "all"
    int seeds = 1;
    BenchmarkSpec bench;
    EnergyConfig base = EnergyConfig::direct_defaults();
    std::filesystem::path out;
};

/// Runs the experiment grids (mu x norm, depth-buffer size U, pooled views J)
/// on the perturbed-sphere benchmark. Emits ablate.csv plus one final-view
/// PFM per setting (first seed). Identical options produce byte-identical
/// outputs.
void run_ablate(const AblateOptions& options);

}  // namespace mvdc
