#include "mvdc/raster.hpp"

#include <cmath>
#include <stdexcept>

namespace mvdc {

namespace {

inline int nearest_pixel(double c) { return static_cast<int>(std::floor(c + 0.5)); }

inline int subcell_index(double c, int u_factor) {
    const long long k = static_cast<long long>(std::floor(c * u_factor));
    const long long m = k % u_factor;
    return static_cast<int>(m < 0 ? m + u_factor : m);
}

}  // namespace

size_t ReprojectionBuffer::candidate_count() const {
    size_t n = 0;
    for (const BufferCell& c : cells) {
        if (c.present()) ++n;
    }
    return n;
}

DepthImage render_depth(const std::vector<Point3>& points, const ViewPose& pose,
                        const Intrinsics& k, int height, int width, double background_depth) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("render_depth: bad resolution");
    DepthImage image(width, height, background_depth);
    for (const Point3& point : points) {
        const auto p = project(point, pose, k);
        if (!p || p->d <= 0.0) continue;
        if (p->d >= background_depth - kForegroundMargin) continue;
        const int x = nearest_pixel(p->u);
        const int y = nearest_pixel(p->v);
        if (x < 0 || x >= width || y < 0 || y >= height) continue;
        if (p->d < image.at(x, y)) image.at(x, y) = p->d;
    }
    return image;
}

PairReprojector::PairReprojector(const View& source, const View& target)
    : relative_(target.pose.rotation * source.pose.rotation.transpose()),
      offset_(target.pose.translation - relative_ * source.pose.translation),
      source_k_(source.intrinsics), target_k_(target.intrinsics) {}

std::optional<Pixel3> PairReprojector::operator()(double u, double v, double d) const {
    Eigen::Vector3d q_source;
    if (source_k_.model == CameraModel::kPerspective) {
        q_source = Eigen::Vector3d((u - source_k_.cx) * d / source_k_.fx,
                                   (v - source_k_.cy) * d / source_k_.fy, d);
    } else {
        q_source = Eigen::Vector3d((u - source_k_.cx) / source_k_.fx,
                                   (v - source_k_.cy) / source_k_.fy, d);
    }
    const Eigen::Vector3d q = relative_ * q_source + offset_;
    Pixel3 p;
    if (target_k_.model == CameraModel::kPerspective) {
        if (q.z() <= 0.0) return std::nullopt;
        p.u = target_k_.fx * q.x() / q.z() + target_k_.cx;
        p.v = target_k_.fy * q.y() / q.z() + target_k_.cy;
    } else {
        p.u = target_k_.fx * q.x() + target_k_.cx;
        p.v = target_k_.fy * q.y() + target_k_.cy;
    }
    p.d = q.z();
    return p;
}

double PairReprojector::depth_slope(double u, double v) const {
    if (source_k_.model == CameraModel::kPerspective) {
        return relative_.row(2).dot(Eigen::Vector3d((u - source_k_.cx) / source_k_.fx,
                                                    (v - source_k_.cy) / source_k_.fy, 1.0));
    }
    return relative_(2, 2);
}

ReprojectionBuffer reproject_view(const DepthImage& source, const View& source_view,
                                  const View& target_view, int u_factor) {
    if (u_factor < 1) throw std::invalid_argument("reproject_view: u_factor must be >= 1");
    ReprojectionBuffer buffer(source.width, source.height, u_factor);
    const PairReprojector reproject(source_view, target_view);
    for (int y = 0; y < source.height; ++y) {
        for (int x = 0; x < source.width; ++x) {
            if (!source.is_foreground(x, y)) continue;
            const auto p = reproject(x, y, source.at(x, y));
            if (!p || p->d <= 0.0) continue;
            const int tx = nearest_pixel(p->u);
            const int ty = nearest_pixel(p->v);
            if (tx < 0 || tx >= buffer.width || ty < 0 || ty >= buffer.height) continue;
            BufferCell& cell =
                buffer.cell(tx, ty, subcell_index(p->u, u_factor), subcell_index(p->v, u_factor));
            if (!cell.present() || p->d < cell.depth) {
                cell.depth = p->d;
                cell.source_pixel = y * source.width + x;
            }
        }
    }
    return buffer;
}

ReprojectionBuffer upsample_target(const DepthImage& target, int u_factor) {
    if (u_factor < 1) throw std::invalid_argument("upsample_target: u_factor must be >= 1");
    ReprojectionBuffer buffer(target.width, target.height, u_factor);
    for (int y = 0; y < target.height; ++y) {
        for (int x = 0; x < target.width; ++x) {
            const double d = target.at(x, y);
            const int32_t src = y * target.width + x;
            for (int sy = 0; sy < u_factor; ++sy) {
                for (int sx = 0; sx < u_factor; ++sx) {
                    buffer.cell(x, y, sx, sy) = {d, src};
                }
            }
        }
    }
    return buffer;
}

ReprojectionBuffer input_substitution_buffer(const DepthImage& input, int u_factor) {
    if (u_factor < 1) throw std::invalid_argument("input_substitution_buffer: u_factor must be >= 1");
    ReprojectionBuffer buffer(input.width, input.height, u_factor);
    for (int y = 0; y < input.height; ++y) {
        for (int x = 0; x < input.width; ++x) {
            if (!input.is_foreground(x, y)) continue;
            const double d = input.at(x, y);
            for (int sy = 0; sy < u_factor; ++sy) {
                for (int sx = 0; sx < u_factor; ++sx) {
                    buffer.cell(x, y, sx, sy) = {d, -2};
                }
            }
        }
    }
    return buffer;
}

double reprojected_depth_derivative(const View& source_view, const View& target_view,
                                    double u, double v) {
    return PairReprojector(source_view, target_view).depth_slope(u, v);
}

}  // namespace mvdc
