#pragma once

#include "mvdc/consistency.hpp"
#include "mvdc/energy.hpp"
#include "mvdc/generator.hpp"
#include "mvdc/metrics.hpp"
#include "mvdc/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace mvdc::io {

/// Parse or encoding failure, carrying the byte offset of the problem.
class IoError : public std::runtime_error {
 public:
    IoError(const std::filesystem::path& path, size_t byte_offset, const std::string& message);

    const std::filesystem::path& path() const { return path_; }
    size_t byte_offset() const { return byte_offset_; }

 private:
    std::filesystem::path path_;
    size_t byte_offset_;
};

// --- PFM: lossless float depth interchange (grayscale, scale -1.0,
// --- little-endian, rows bottom-up). Values are stored as float32.

void write_pfm(const DepthImage& image, const std::filesystem::path& path);

/// Reads a PFM written by write_pfm. The background depth is taken from
/// `background` when given, otherwise the maximum value in the file.
DepthImage read_pfm(const std::filesystem::path& path,
                    std::optional<double> background = std::nullopt);

// --- 16-bit PGM: viewer-friendly depth with linear quantization over a
// --- declared range (kept in a header comment).

void write_pgm16(const DepthImage& image, const std::filesystem::path& path, double range_min,
                 double range_max);
DepthImage read_pgm16(const std::filesystem::path& path);

// --- 8-bit PGM: loss-map export with a declared linear full-scale value.

void write_loss_pgm8(const LossMap& map, const std::filesystem::path& path, double full_scale);

struct LossImage8 {
    int width = 0;
    int height = 0;
    double full_scale = 0.0;
    std::vector<uint8_t> codes;
};
LossImage8 read_loss_pgm8(const std::filesystem::path& path);

// --- PLY: point clouds with optional normals. Properties are stored as
// --- doubles; both ascii and binary_little_endian round-trip exactly.

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, bool binary = false);
PointCloud read_ply(const std::filesystem::path& path);

// --- JSON configs and reports (top-level schema_version field throughout).

void write_rig(const CameraRig& rig, const std::filesystem::path& path);
CameraRig read_rig(const std::filesystem::path& path);

void write_scene_spec(const SceneSpec& spec, const std::filesystem::path& path);
SceneSpec read_scene_spec(const std::filesystem::path& path);

void write_energy_config(const EnergyConfig& cfg, const std::filesystem::path& path);
EnergyConfig read_energy_config(const std::filesystem::path& path);

/// Bundle describing an RBF toy generator: base surface plus RBF layout.
/// Centers are either listed explicitly or spread on a Fibonacci sphere.
struct RbfGeneratorSpec {
    RbfGeneratorConfig config;      // centers may be left empty here
    int center_count = 32;          // used when config.centers is empty
    double center_radius = 0.9;
    ShapeSpec base_shape = ShapeSpec::sphere(0.9);
    int base_samples = 16000;
    uint64_t base_seed = 7;
};

void write_generator_spec(const RbfGeneratorSpec& spec, const std::filesystem::path& path);
RbfGeneratorSpec read_generator_spec(const std::filesystem::path& path);

std::unique_ptr<RbfShapeGenerator> build_rbf_generator(const RbfGeneratorSpec& spec,
                                                       const CameraRig& rig);

/// Optimization report: per-step losses, selection, and final summary.
void write_report(const EnergyReport& report, const EnergyConfig& cfg, const std::string& mode,
                  const std::filesystem::path& path);

}  // namespace mvdc::io
