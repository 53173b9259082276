#pragma once

#include <cstdint>
#include <vector>

namespace mvdc {

/// Margin below background_depth under which a pixel counts as foreground.
inline constexpr double kForegroundMargin = 1e-6;

/// H x W grid of depths in scene units. Background pixels hold exactly
/// background_depth; foreground pixels lie in (0, background_depth).
struct DepthImage {
    int width = 0;
    int height = 0;
    double background_depth = 0.0;
    std::vector<double> data;  // row-major, data[y * width + x]

    DepthImage() = default;
    DepthImage(int w, int h, double background)
        : width(w), height(h), background_depth(background),
          data(static_cast<size_t>(w) * h, background) {}

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    bool is_foreground(int x, int y) const {
        return at(x, y) < background_depth - kForegroundMargin;
    }
    bool same_shape(const DepthImage& other) const {
        return width == other.width && height == other.height;
    }
    size_t pixel_count() const { return data.size(); }

    int foreground_count() const;

    /// Throws std::invalid_argument if any entry is non-finite, nonpositive,
    /// or lies in the dead band [background - margin, background).
    void validate() const;
};

struct DepthRange {
    double min = 0.0;
    double max = 0.0;
    double extent() const { return max - min; }
};

/// Min/max over the foreground pixels of all views. Throws std::domain_error
/// if every pixel is background.
DepthRange foreground_depth_range(const std::vector<DepthImage>& views);

}  // namespace mvdc
