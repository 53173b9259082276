#pragma once

#include "mvdc/camera.hpp"
#include "mvdc/depth_image.hpp"

#include <cstdint>
#include <vector>

namespace mvdc {

/// One sub-cell of a reprojection buffer: the nearest candidate depth that
/// landed in the cell, plus the flattened source pixel it came from
/// (-1 = empty cell, -2 = candidate without a source pixel).
struct BufferCell {
    double depth = 0.0;
    int32_t source_pixel = -1;

    bool present() const { return source_pixel != -1; }
};

/// H x W grid of U x U sub-cells holding reprojected depth candidates
/// (the pseudo-rendering store).
struct ReprojectionBuffer {
    int width = 0;
    int height = 0;
    int u_factor = 1;
    std::vector<BufferCell> cells;  // indexed by ((y * W + x) * U + sy) * U + sx

    ReprojectionBuffer() = default;
    ReprojectionBuffer(int w, int h, int u)
        : width(w), height(h), u_factor(u),
          cells(static_cast<size_t>(w) * h * u * u) {}

    BufferCell& cell(int x, int y, int sx, int sy) {
        return cells[((static_cast<size_t>(y) * width + x) * u_factor + sy) * u_factor + sx];
    }
    const BufferCell& cell(int x, int y, int sx, int sy) const {
        return cells[((static_cast<size_t>(y) * width + x) * u_factor + sy) * u_factor + sx];
    }

    size_t candidate_count() const;
};

/// Splats points into a z-buffered depth image. Points behind the camera,
/// outside the frame, or at/beyond the far plane are dropped; each pixel
/// keeps the nearest depth (nearest-integer pixel assignment).
DepthImage render_depth(const std::vector<Point3>& points, const ViewPose& pose,
                        const Intrinsics& k, int height, int width, double background_depth);

/// Source-pixel-to-target-pixel transform for a fixed view pair, with the
/// relative rotation folded in once. Equivalent to back_project on the source
/// followed by project on the target.
class PairReprojector {
 public:
    PairReprojector(const View& source, const View& target);

    /// Target pixel of source pixel (u, v) at depth d, or nullopt when the
    /// reprojected point falls behind a perspective target camera.
    std::optional<Pixel3> operator()(double u, double v, double d) const;

    /// Slope of the reprojected depth in the source depth at pixel (u, v).
    double depth_slope(double u, double v) const;

 private:
    Eigen::Matrix3d relative_;   // R_t R_sᵀ
    Eigen::Vector3d offset_;     // τ_t - R_t R_sᵀ τ_s
    Intrinsics source_k_;
    Intrinsics target_k_;
};

/// Reprojects every foreground source pixel into the target view and stores
/// the candidates in a U x U sub-pixel buffer. The pixel is the nearest
/// integer to the continuous target coordinate; the sub-cell is the
/// unit-aligned 1/U bucket of that coordinate. Sub-cell collisions keep the
/// minimum depth.
ReprojectionBuffer reproject_view(const DepthImage& source, const View& source_view,
                                  const View& target_view, int u_factor);

/// Replicates each pixel into all U x U sub-cells (all cells present).
ReprojectionBuffer upsample_target(const DepthImage& target, int u_factor);

/// Candidate buffer standing in for the reprojection of a view onto itself:
/// foreground pixels of `input` fill their own U x U cells, background pixels
/// stay empty. Candidates carry no source pixel (they are fixed data).
ReprojectionBuffer input_substitution_buffer(const DepthImage& input, int u_factor);

/// d(reprojected depth)/d(source depth) for a source pixel (u, v): the
/// reprojected camera-space z is affine in the source depth, and this is its
/// slope. Fixed by the two poses and the pixel location alone.
double reprojected_depth_derivative(const View& source_view, const View& target_view,
                                    double u, double v);

}  // namespace mvdc
