#pragma once

#include "mvdc/camera.hpp"
#include "mvdc/depth_image.hpp"
#include "mvdc/raster.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mvdc {

/// Per-pixel distance between a reprojection buffer and a target view.
/// Excluded pixels (no candidates, or suppressed outliers) hold -1.
struct ConsistencyDistanceMap {
    static constexpr double kExcluded = -1.0;

    int width = 0;
    int height = 0;
    std::vector<double> values;        // distance or kExcluded
    std::vector<double> candidates;    // winning candidate depth (valid when present)
    std::vector<int32_t> source_pixels;  // winning source pixel, -2 if sourceless

    ConsistencyDistanceMap() = default;
    ConsistencyDistanceMap(int w, int h)
        : width(w), height(h), values(static_cast<size_t>(w) * h, kExcluded),
          candidates(static_cast<size_t>(w) * h, 0.0),
          source_pixels(static_cast<size_t>(w) * h, -1) {}

    bool present(size_t i) const { return values[i] >= 0.0; }
    size_t pixel_count() const { return values.size(); }

    size_t present_count() const;
    double present_mean() const;  // 0 when nothing is present
};

/// Pooled per-pixel minimum over selected distance maps. Pixels excluded in
/// every selected map hold 0.
struct LossMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    LossMap() = default;
    LossMap(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0) {}

    double mean() const;
};

struct ConsistencyConfig {
    int u_factor = 5;
    int j_views = 8;
    double outlier_fraction = 0.025;
    DepthRange depth_range;  // frozen once per optimization

    double outlier_threshold() const { return outlier_fraction * depth_range.extent(); }
};

/// Per pixel, the minimum L1 distance between the target depth and the
/// candidates in the pixel's U x U cell. Pixels with no candidates are
/// excluded.
ConsistencyDistanceMap closest_point_pooling(const ReprojectionBuffer& buffer,
                                             const DepthImage& target);

/// Excludes entries strictly above outlier_fraction * depth range.
ConsistencyDistanceMap suppress_outliers(const ConsistencyDistanceMap& d,
                                         const ConsistencyConfig& cfg);

/// D^t_s: reproject-pool-suppress for s != t; for s == t the input view
/// substitutes for the reprojection (background input pixels are excluded).
ConsistencyDistanceMap pairwise_distance(int source_index, int target_index,
                                         const std::vector<DepthImage>& views,
                                         const std::vector<DepthImage>& inputs,
                                         const CameraRig& rig, const ConsistencyConfig& cfg);

/// Source views sorted by angle between view directions to the target
/// (ascending), ties broken by ascending view index. The target itself sorts
/// first.
std::vector<int> pooling_order(const CameraRig& rig, int target_index);

/// Winning map index per pixel after pooling, -1 where everything was
/// excluded.
struct PooledProvenance {
    std::vector<int32_t> winner;
};

/// Per-pixel minimum over the first j maps of `order`. All maps must share
/// dimensions; 1 <= j <= order.size().
LossMap consistency_pooling(std::span<const ConsistencyDistanceMap> maps,
                            std::span<const int> order, int j,
                            PooledProvenance* provenance = nullptr);

/// What the backward pass needs per target pixel: which source view won the
/// pooling, which source pixel produced the candidate, and the candidate
/// depth. source_view = -1 marks pixels excluded everywhere.
struct PixelWinner {
    int32_t source_view = -1;
    int32_t source_pixel = -1;  // -2 for sourceless (input substitution) candidates
    double candidate = 0.0;
};

struct ConsistencyTrace {
    double loss = 0.0;
    std::vector<LossMap> loss_maps;               // one per target view
    std::vector<std::vector<PixelWinner>> winners;  // [target][pixel]
    int n_views = 0;
    int width = 0;
    int height = 0;
};

/// Full forward pass: all N^2 pairwise distances, per-target pooling, and the
/// scalar mean over N*H*W (excluded pixels contribute 0). Pair computations
/// run on `threads` workers with a deterministic merge.
ConsistencyTrace consistency_forward(const std::vector<DepthImage>& views,
                                     const std::vector<DepthImage>& inputs,
                                     const CameraRig& rig, const ConsistencyConfig& cfg,
                                     int threads = 1);

/// Scalar consistency loss plus the per-target loss maps.
std::pair<double, std::vector<LossMap>> consistency_loss(const std::vector<DepthImage>& views,
                                                         const std::vector<DepthImage>& inputs,
                                                         const CameraRig& rig,
                                                         const ConsistencyConfig& cfg,
                                                         int threads = 1);

}  // namespace mvdc
