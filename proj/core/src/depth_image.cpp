#include "mvdc/depth_image.hpp"

#include <cmath>
#include <stdexcept>

namespace mvdc {

int DepthImage::foreground_count() const {
    int n = 0;
    for (double d : data) {
        if (d < background_depth - kForegroundMargin) ++n;
    }
    return n;
}

void DepthImage::validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("DepthImage: empty dimensions");
    if (data.size() != static_cast<size_t>(width) * height) {
        throw std::invalid_argument("DepthImage: data size mismatch");
    }
    for (double d : data) {
        if (!std::isfinite(d)) throw std::invalid_argument("DepthImage: non-finite depth");
        if (d == background_depth) continue;
        if (d <= 0.0 || d >= background_depth - kForegroundMargin) {
            throw std::invalid_argument("DepthImage: foreground depth out of range");
        }
    }
}

DepthRange foreground_depth_range(const std::vector<DepthImage>& views) {
    DepthRange r{1e300, -1e300};
    for (const DepthImage& v : views) {
        for (int y = 0; y < v.height; ++y) {
            for (int x = 0; x < v.width; ++x) {
                if (!v.is_foreground(x, y)) continue;
                const double d = v.at(x, y);
                r.min = std::min(r.min, d);
                r.max = std::max(r.max, d);
            }
        }
    }
    if (r.min > r.max) throw std::domain_error("foreground_depth_range: no foreground pixels");
    return r;
}

}  // namespace mvdc
