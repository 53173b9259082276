#include "mvdc/generator.hpp"

#include <Eigen/Cholesky>

#include <algorithm>

#include <cmath>
#include <stdexcept>

namespace mvdc {

namespace {

// Spatial splat kernel: triangle hat of radius 1.5 px per axis (3x3 support).
constexpr double kHatRadius = 1.5;
// Coverage below this ramps the pixel smoothly toward background; above it the
// pixel is pure soft-min depth (zero blend bias and zero blend gradient).
constexpr double kCoverageRamp = 0.4;

inline double hat(double t) { return std::max(0.0, 1.0 - std::abs(t) / kHatRadius); }
inline double hat_derivative(double t) {
    if (std::abs(t) >= kHatRadius || t == 0.0) return 0.0;
    return (t > 0.0 ? -1.0 : 1.0) / kHatRadius;
}

inline double blend_alpha(double coverage) {
    const double t = coverage / kCoverageRamp;
    if (t >= 1.0) return 1.0;
    return t * t * (3.0 - 2.0 * t);
}

inline double blend_alpha_derivative(double coverage) {
    const double t = coverage / kCoverageRamp;
    if (t >= 1.0) return 0.0;
    return 6.0 * t * (1.0 - t) / kCoverageRamp;
}

struct ProjectedPoint {
    double u = 0.0, v = 0.0, d = 0.0;
    double du_df = 0.0, dv_df = 0.0, dd_df = 0.0;
    bool valid = false;
};

ProjectedPoint project_with_jacobian(const Point3& point, const Eigen::Vector3d& direction,
                                     const View& view, double background_depth) {
    ProjectedPoint out;
    const Eigen::Vector3d q = view.pose.rotation * point + view.pose.translation;
    const Eigen::Vector3d g = view.pose.rotation * direction;
    const Intrinsics& k = view.intrinsics;
    if (q.z() <= 0.0 || q.z() >= background_depth - kForegroundMargin) return out;
    if (k.model == CameraModel::kPerspective) {
        out.u = k.fx * q.x() / q.z() + k.cx;
        out.v = k.fy * q.y() / q.z() + k.cy;
        out.du_df = k.fx * (g.x() * q.z() - q.x() * g.z()) / (q.z() * q.z());
        out.dv_df = k.fy * (g.y() * q.z() - q.y() * g.z()) / (q.z() * q.z());
    } else {
        out.u = k.fx * q.x() + k.cx;
        out.v = k.fy * q.y() + k.cy;
        out.du_df = k.fx * g.x();
        out.dv_df = k.fy * g.y();
    }
    out.d = q.z();
    out.dd_df = g.z();
    out.valid = true;
    return out;
}

}  // namespace

struct RbfShapeGenerator::Splat {
    int32_t point = 0;
    int32_t pixel = 0;
    double bx = 0.0, by = 0.0;  // per-axis hat weights
    ProjectedPoint proj;
};

RbfShapeGenerator::RbfShapeGenerator(std::vector<Point3> base_points, RbfGeneratorConfig config,
                                     CameraRig rig)
    : base_points_(std::move(base_points)), config_(std::move(config)), rig_(std::move(rig)) {
    if (base_points_.empty()) throw std::invalid_argument("RbfShapeGenerator: empty base cloud");
    if (config_.centers.empty()) throw std::invalid_argument("RbfShapeGenerator: no centers");
    if (config_.bandwidth <= 0.0) throw std::invalid_argument("RbfShapeGenerator: bandwidth <= 0");

    const double sigma = config_.bandwidth;
    const double cutoff2 = 16.0 * sigma * sigma;
    basis_.resize(base_points_.size());
    for (size_t j = 0; j < base_points_.size(); ++j) {
        for (size_t k = 0; k < config_.centers.size(); ++k) {
            const double r2 = (base_points_[j] - config_.centers[k]).squaredNorm();
            if (r2 >= cutoff2) continue;
            basis_[j].emplace_back(static_cast<int>(k), std::exp(-r2 / (2.0 * sigma * sigma)));
        }
    }

    // Soft-min temperature: a fixed fraction of the base model's depth range.
    double dmin = 1e300, dmax = -1e300;
    for (const View& view : rig_.views) {
        for (const Point3& p : base_points_) {
            const auto px = project(p, view.pose, view.intrinsics);
            if (!px || px->d <= 0.0) continue;
            dmin = std::min(dmin, px->d);
            dmax = std::max(dmax, px->d);
        }
    }
    if (dmin >= dmax) throw std::domain_error("RbfShapeGenerator: base cloud not visible");
    temperature_ = config_.temperature_fraction * (dmax - dmin);
}

std::vector<Point3> RbfShapeGenerator::displace(const ShapeDescriptor& z) const {
    if (z.dim() != descriptor_dim()) {
        throw std::invalid_argument("RbfShapeGenerator: descriptor dimension mismatch");
    }
    std::vector<Point3> out(base_points_.size());
    for (size_t j = 0; j < base_points_.size(); ++j) {
        double f = 0.0;
        for (const auto& [k, phi] : basis_[j]) f += z.values[k] * phi;
        const double norm = base_points_[j].norm();
        out[j] = norm < 1e-12 ? base_points_[j]
                              : Point3(base_points_[j] + (f / norm) * base_points_[j]);
    }
    return out;
}

void RbfShapeGenerator::accumulate_view(const std::vector<Point3>& points, const View& view,
                                        std::vector<double>& min_depth,
                                        std::vector<double>& weight_sum,
                                        std::vector<double>& weighted_depth,
                                        std::vector<double>& coverage,
                                        std::vector<Splat>* splats) const {
    const int width = rig_.width;
    const int height = rig_.height;
    const size_t n_pixels = static_cast<size_t>(width) * height;
    min_depth.assign(n_pixels, 1e300);
    weight_sum.assign(n_pixels, 0.0);
    weighted_depth.assign(n_pixels, 0.0);
    coverage.assign(n_pixels, 0.0);

    std::vector<ProjectedPoint> projected(points.size());
    for (size_t j = 0; j < points.size(); ++j) {
        const double norm = base_points_[j].norm();
        const Eigen::Vector3d dir =
            norm < 1e-12 ? Eigen::Vector3d::Zero() : Eigen::Vector3d(base_points_[j] / norm);
        projected[j] = project_with_jacobian(points[j], dir, view, config_.background_depth);
    }

    // Pass 1: per-pixel minimum depth anchors the soft-min exponentials.
    for (const ProjectedPoint& p : projected) {
        if (!p.valid) continue;
        const int x0 = std::max(0, static_cast<int>(std::ceil(p.u - kHatRadius)));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(p.u + kHatRadius)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(p.v - kHatRadius)));
        const int y1 = std::min(height - 1, static_cast<int>(std::floor(p.v + kHatRadius)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const size_t i = static_cast<size_t>(y) * width + x;
                if (p.d < min_depth[i]) min_depth[i] = p.d;
            }
        }
    }

    // Pass 2: accumulate soft-min numerator/denominator and spatial coverage.
    for (size_t j = 0; j < projected.size(); ++j) {
        const ProjectedPoint& p = projected[j];
        if (!p.valid) continue;
        const int x0 = std::max(0, static_cast<int>(std::ceil(p.u - kHatRadius)));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(p.u + kHatRadius)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(p.v - kHatRadius)));
        const int y1 = std::min(height - 1, static_cast<int>(std::floor(p.v + kHatRadius)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const size_t i = static_cast<size_t>(y) * width + x;
                const double bx = hat(p.u - x);
                const double by = hat(p.v - y);
                const double b = bx * by;
                if (b <= 0.0) continue;
                const double w = b * std::exp(-(p.d - min_depth[i]) / temperature_);
                weight_sum[i] += w;
                weighted_depth[i] += w * p.d;
                coverage[i] += b;
                if (splats) {
                    splats->push_back({static_cast<int32_t>(j), static_cast<int32_t>(i), bx, by, p});
                }
            }
        }
    }
}

DepthImage RbfShapeGenerator::soft_render(const std::vector<Point3>& points,
                                          const View& view) const {
    std::vector<double> min_depth, weight_sum, weighted_depth, coverage;
    accumulate_view(points, view, min_depth, weight_sum, weighted_depth, coverage, nullptr);
    DepthImage image(rig_.width, rig_.height, config_.background_depth);
    for (size_t i = 0; i < image.data.size(); ++i) {
        if (weight_sum[i] <= 0.0) continue;
        const double soft = weighted_depth[i] / weight_sum[i];
        const double alpha = blend_alpha(coverage[i]);
        image.data[i] = alpha * soft + (1.0 - alpha) * config_.background_depth;
    }
    return image;
}

std::vector<DepthImage> RbfShapeGenerator::forward(const ShapeDescriptor& z,
                                                   const std::vector<DepthImage>&) const {
    const std::vector<Point3> points = displace(z);
    std::vector<DepthImage> views;
    views.reserve(rig_.views.size());
    for (const View& view : rig_.views) views.push_back(soft_render(points, view));
    return views;
}

ShapeDescriptor RbfShapeGenerator::backward(const ShapeDescriptor& z,
                                            const std::vector<DepthImage>&,
                                            const ViewGradients& upstream) const {
    if (static_cast<int>(upstream.size()) != rig_.size()) {
        throw std::invalid_argument("RbfShapeGenerator::backward: upstream view count mismatch");
    }
    const std::vector<Point3> points = displace(z);
    std::vector<double> f_bar(points.size(), 0.0);

    std::vector<double> min_depth, weight_sum, weighted_depth, coverage;
    std::vector<Splat> splats;
    for (int n = 0; n < rig_.size(); ++n) {
        splats.clear();
        accumulate_view(points, rig_.views[n], min_depth, weight_sum, weighted_depth, coverage,
                        &splats);
        const std::vector<double>& up = upstream[n];
        if (up.size() != min_depth.size()) {
            throw std::invalid_argument("RbfShapeGenerator::backward: upstream size mismatch");
        }
        for (const Splat& s : splats) {
            const double u_bar = up[s.pixel];
            if (u_bar == 0.0) continue;
            const double W = weight_sum[s.pixel];
            const double B = coverage[s.pixel];
            const double soft = weighted_depth[s.pixel] / W;
            const double alpha = blend_alpha(B);
            const double b = s.bx * s.by;
            const double e = std::exp(-(s.proj.d - min_depth[s.pixel]) / temperature_);
            const double w = b * e;

            // Depth path (soft-min is shift-invariant, so the anchor is a constant).
            const double dout_dd = alpha * (w / W) * (1.0 + (soft - s.proj.d) / temperature_);
            // Spatial path: weight change moves both the soft-min and the blend.
            const double dout_db = alpha * e * (s.proj.d - soft) / W +
                                   blend_alpha_derivative(B) * (soft - config_.background_depth);
            const int x = static_cast<int>(s.pixel) % rig_.width;
            const int y = static_cast<int>(s.pixel) / rig_.width;
            const double db_du = hat_derivative(s.proj.u - x) * s.by;
            const double db_dv = s.bx * hat_derivative(s.proj.v - y);

            f_bar[s.point] += u_bar * (dout_dd * s.proj.dd_df +
                                       dout_db * (db_du * s.proj.du_df + db_dv * s.proj.dv_df));
        }
    }

    ShapeDescriptor grad;
    grad.values = Eigen::VectorXd::Zero(descriptor_dim());
    for (size_t j = 0; j < points.size(); ++j) {
        if (f_bar[j] == 0.0) continue;
        for (const auto& [k, phi] : basis_[j]) grad.values[k] += f_bar[j] * phi;
    }
    return grad;
}

bool RbfShapeGenerator::fit_correction(const std::vector<DepthImage>& inputs,
                                       const ShapeDescriptor& reference,
                                       Eigen::VectorXd* correction) const {
    const int dim = descriptor_dim();
    const std::vector<DepthImage> reference_views = forward(reference, inputs);

    // Observed radial offsets against the reference render along matching
    // rays, regressed onto the RBF basis with a ridge term. Pixels on the
    // silhouette blend ramp read as depths partway to the background, so the
    // fit is re-solved once with large-residual rows trimmed.
    const double sigma = config_.bandwidth;
    const double cutoff2 = 16.0 * sigma * sigma;
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> deltas;
    Eigen::VectorXd row(dim);
    for (int n = 0; n < rig_.size(); ++n) {
        const View& view = rig_.views[n];
        if (inputs[n].width != rig_.width || inputs[n].height != rig_.height) {
            throw std::invalid_argument("initial_descriptor: input resolution mismatch");
        }
        for (int y = 0; y < rig_.height; ++y) {
            for (int x = 0; x < rig_.width; ++x) {
                if (!inputs[n].is_foreground(x, y) || !reference_views[n].is_foreground(x, y)) {
                    continue;
                }
                const Pixel3 px_in{static_cast<double>(x), static_cast<double>(y),
                                   inputs[n].at(x, y)};
                const Pixel3 px_ref{static_cast<double>(x), static_cast<double>(y),
                                    reference_views[n].at(x, y)};
                const Point3 p_in = back_project(px_in, view.pose, view.intrinsics);
                const Point3 p_ref = back_project(px_ref, view.pose, view.intrinsics);
                const double delta = p_in.norm() - p_ref.norm();
                row.setZero();
                bool any = false;
                for (int k = 0; k < dim; ++k) {
                    const double r2 = (p_ref - config_.centers[k]).squaredNorm();
                    if (r2 >= cutoff2) continue;
                    row[k] = std::exp(-r2 / (2.0 * sigma * sigma));
                    any = true;
                }
                if (!any) continue;
                rows.push_back(row);
                deltas.push_back(delta);
            }
        }
    }
    if (rows.empty()) return false;

    auto solve = [&](const std::vector<char>& keep, Eigen::VectorXd* out) {
        Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd atb = Eigen::VectorXd::Zero(dim);
        size_t used = 0;
        for (size_t i = 0; i < rows.size(); ++i) {
            if (!keep[i]) continue;
            ata.selfadjointView<Eigen::Lower>().rankUpdate(rows[i]);
            atb += deltas[i] * rows[i];
            ++used;
        }
        if (used == 0) return false;
        ata = Eigen::MatrixXd(ata.selfadjointView<Eigen::Lower>());
        ata.diagonal().array() += config_.ridge;
        *out = ata.ldlt().solve(atb);
        return out->allFinite();
    };

    std::vector<char> keep(rows.size(), 1);
    Eigen::VectorXd solution;
    if (!solve(keep, &solution)) return false;

    std::vector<double> residuals(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        residuals[i] = std::abs(deltas[i] - rows[i].dot(solution));
    }
    std::vector<double> sorted = residuals;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double cutoff = std::max(6.0 * sorted[sorted.size() / 2], 1e-9);
    for (size_t i = 0; i < rows.size(); ++i) keep[i] = residuals[i] <= cutoff;
    Eigen::VectorXd trimmed;
    if (solve(keep, &trimmed)) solution = trimmed;

    *correction = solution;
    return true;
}

InitialDescriptor RbfShapeGenerator::initial_descriptor(
    const std::vector<DepthImage>& inputs) const {
    const int dim = descriptor_dim();
    InitialDescriptor out;
    out.z.values = Eigen::VectorXd::Zero(dim);
    if (static_cast<int>(inputs.size()) != rig_.size()) {
        throw std::invalid_argument("initial_descriptor: input count mismatch");
    }

    // Least-squares fit plus refinements against the fitted render, which
    // cancel the rasterizer's view-dependent bias order by order.
    Eigen::VectorXd correction(dim);
    if (!fit_correction(inputs, out.z, &correction)) {
        out.fallback = true;
        return out;
    }
    out.z.values = correction;
    for (int refinement = 0; refinement < 2; ++refinement) {
        if (!fit_correction(inputs, out.z, &correction)) break;
        out.z.values += correction;
        if (correction.norm() < 1e-6) break;
    }
    return out;
}

}  // namespace mvdc
