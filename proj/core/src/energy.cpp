#include "mvdc/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace mvdc {

namespace {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_same_stack(const std::vector<DepthImage>& v, const std::vector<DepthImage>& y,
                      const char* what) {
    if (v.size() != y.size() || v.empty()) throw std::invalid_argument(std::string(what) + ": view count mismatch");
    for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].same_shape(y[i])) throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
}

size_t stack_elements(const std::vector<DepthImage>& v) {
    size_t n = 0;
    for (const DepthImage& img : v) n += img.pixel_count();
    return n;
}

DepthRange frozen_depth_range(const std::vector<DepthImage>& preferred,
                              const std::vector<DepthImage>& fallback) {
    try {
        return foreground_depth_range(preferred);
    } catch (const std::domain_error&) {
        return foreground_depth_range(fallback);
    }
}

}  // namespace

void EnergyConfig::validate() const {
    if (mu < 0.0) throw std::invalid_argument("EnergyConfig: mu must be >= 0");
    if (steps < 1) throw std::invalid_argument("EnergyConfig: steps must be >= 1");
    if (select_window < 1 || select_window > steps) {
        throw std::invalid_argument("EnergyConfig: select_window out of range");
    }
    if (learning_rate <= 0.0) throw std::invalid_argument("EnergyConfig: learning_rate must be > 0");
    if (consistency.u_factor < 1) throw std::invalid_argument("EnergyConfig: u_factor must be >= 1");
    if (consistency.outlier_fraction <= 0.0 || consistency.outlier_fraction >= 1.0) {
        throw std::invalid_argument("EnergyConfig: outlier_fraction out of (0, 1)");
    }
}

EnergyConfig EnergyConfig::direct_defaults() {
    EnergyConfig cfg;
    cfg.mu = 1.0;
    cfg.gen_norm = NormKind::kL2;
    cfg.steps = 100;
    cfg.learning_rate = 0.0006;
    cfg.select_window = 10;
    cfg.grad_scale = GradScale::kViewSum;
    return cfg;
}

EnergyConfig EnergyConfig::descriptor_defaults() {
    EnergyConfig cfg;
    cfg.mu = 1.0;
    cfg.gen_norm = NormKind::kL2;
    cfg.steps = 100;
    cfg.learning_rate = 0.2;
    cfg.select_window = 10;
    cfg.grad_scale = GradScale::kMean;
    return cfg;
}

int EnergyReport::window_start(int select_window) const {
    const int last = steps.empty() ? 0 : steps.back().step;
    return std::max(1, last - select_window + 1);
}

double generator_loss(const std::vector<DepthImage>& v, const std::vector<DepthImage>& y,
                      NormKind norm) {
    check_same_stack(v, y, "generator_loss");
    const double count = static_cast<double>(stack_elements(v));
    double acc = 0.0;
    for (size_t n = 0; n < v.size(); ++n) {
        for (size_t i = 0; i < v[n].data.size(); ++i) {
            const double d = v[n].data[i] - y[n].data[i];
            acc += norm == NormKind::kL1 ? std::abs(d) : d * d;
        }
    }
    acc /= count;
    return norm == NormKind::kL1 ? acc : std::sqrt(acc);
}

ViewGradients generator_loss_backward(const std::vector<DepthImage>& v,
                                      const std::vector<DepthImage>& y, NormKind norm) {
    check_same_stack(v, y, "generator_loss_backward");
    const double count = static_cast<double>(stack_elements(v));
    ViewGradients grads(v.size());
    const double l2 = norm == NormKind::kL2 ? generator_loss(v, y, norm) : 0.0;
    for (size_t n = 0; n < v.size(); ++n) {
        grads[n].assign(v[n].data.size(), 0.0);
        for (size_t i = 0; i < v[n].data.size(); ++i) {
            const double d = v[n].data[i] - y[n].data[i];
            if (norm == NormKind::kL1) {
                grads[n][i] = sgn(d) / count;
            } else if (l2 > 0.0) {
                grads[n][i] = d / (count * l2);
            }
        }
    }
    return grads;
}

TotalLoss total_loss(const std::vector<DepthImage>& v, const std::vector<DepthImage>& y,
                     const std::vector<DepthImage>& inputs, const CameraRig& rig,
                     const EnergyConfig& cfg) {
    TotalLoss out;
    out.consistency = consistency_loss(v, inputs, rig, cfg.consistency, cfg.threads).first;
    out.generator = generator_loss(v, y, cfg.gen_norm);
    out.total = out.consistency + cfg.mu * out.generator;
    return out;
}

ViewGradients consistency_loss_backward(const ConsistencyTrace& trace,
                                        const std::vector<DepthImage>& views,
                                        const CameraRig& rig) {
    const int n = trace.n_views;
    if (n == 0 || static_cast<int>(views.size()) != n || rig.size() != n ||
        static_cast<int>(trace.winners.size()) != n) {
        throw std::invalid_argument("consistency_loss_backward: trace does not match a forward pass");
    }
    for (const DepthImage& v : views) {
        if (v.width != trace.width || v.height != trace.height) {
            throw std::invalid_argument("consistency_loss_backward: view shape mismatch");
        }
    }

    // Third row of R_t R_sᵀ per pair; the depth slope is its dot product with
    // the source pixel's camera-space direction.
    std::vector<Eigen::Vector3d> relative_rows(static_cast<size_t>(n) * n);
    for (int t = 0; t < n; ++t) {
        for (int s = 0; s < n; ++s) {
            relative_rows[static_cast<size_t>(t) * n + s] =
                (rig.views[t].pose.rotation * rig.views[s].pose.rotation.transpose())
                    .row(2)
                    .transpose();
        }
    }

    const double scale =
        1.0 / (static_cast<double>(n) * trace.width * trace.height);
    ViewGradients grads(n);
    for (int t = 0; t < n; ++t) grads[t].assign(views[t].data.size(), 0.0);

    for (int t = 0; t < n; ++t) {
        const auto& winners = trace.winners[t];
        for (size_t i = 0; i < winners.size(); ++i) {
            const PixelWinner& w = winners[i];
            if (w.source_view < 0) continue;
            const double sign = sgn(w.candidate - views[t].data[i]);
            if (sign == 0.0) continue;
            grads[t][i] -= sign * scale;
            if (w.source_pixel >= 0) {
                const int s = w.source_view;
                const Intrinsics& k = rig.views[s].intrinsics;
                const int us = w.source_pixel % trace.width;
                const int vs = w.source_pixel / trace.width;
                const Eigen::Vector3d& row = relative_rows[static_cast<size_t>(t) * n + s];
                double slope;
                if (k.model == CameraModel::kPerspective) {
                    slope = row.dot(Eigen::Vector3d((us - k.cx) / k.fx, (vs - k.cy) / k.fy, 1.0));
                } else {
                    slope = row.z();
                }
                grads[s][w.source_pixel] += sign * slope * scale;
            }
        }
    }
    return grads;
}

namespace {

struct EvalResult {
    ConsistencyTrace trace;
    double generator = 0.0;
    double total = 0.0;

    bool finite() const {
        return std::isfinite(trace.loss) && std::isfinite(generator) && std::isfinite(total);
    }
};

EvalResult evaluate(const std::vector<DepthImage>& v, const std::vector<DepthImage>& y,
                    const std::vector<DepthImage>& inputs, const CameraRig& rig,
                    const EnergyConfig& cfg) {
    EvalResult r;
    r.trace = consistency_forward(v, inputs, rig, cfg.consistency, cfg.threads);
    r.generator = generator_loss(v, y, cfg.gen_norm);
    r.total = r.trace.loss + cfg.mu * r.generator;
    return r;
}

}  // namespace

EnergyReport direct_optimize(const std::vector<DepthImage>& initial_views,
                             const std::vector<DepthImage>& inputs, const CameraRig& rig,
                             const EnergyConfig& cfg, const StepObserver& observer) {
    cfg.validate();
    EnergyConfig run_cfg = cfg;
    if (run_cfg.consistency.depth_range.extent() <= 0.0) {
        run_cfg.consistency.depth_range = frozen_depth_range(inputs, initial_views);
    }

    const std::vector<DepthImage>& anchor = initial_views;
    std::vector<DepthImage> views = initial_views;
    const double element_count = static_cast<double>(stack_elements(views));
    const double step_scale = run_cfg.grad_scale == GradScale::kViewSum
                                  ? element_count / static_cast<double>(views.size())
                                  : 1.0;

    EnergyReport report;
    EvalResult eval = evaluate(views, anchor, inputs, rig, run_cfg);
    report.steps.push_back({0, eval.trace.loss, eval.generator, eval.total});
    report.final_views = views;
    if (observer) observer(0, eval.trace);

    const int window_start = run_cfg.steps - run_cfg.select_window + 1;
    bool have_best = false;
    double best_consistency = 0.0;

    ViewGradients velocity;
    for (int step = 1; step <= run_cfg.steps; ++step) {
        ViewGradients grads = consistency_loss_backward(eval.trace, views, rig);
        const ViewGradients gen_grads = generator_loss_backward(views, anchor, run_cfg.gen_norm);
        for (size_t n = 0; n < grads.size(); ++n) {
            for (size_t i = 0; i < grads[n].size(); ++i) {
                grads[n][i] = (grads[n][i] + run_cfg.mu * gen_grads[n][i]) * step_scale;
            }
        }
        if (run_cfg.momentum > 0.0 && !run_cfg.backtracking) {
            if (velocity.empty()) {
                velocity.resize(grads.size());
                for (size_t n = 0; n < grads.size(); ++n) velocity[n].assign(grads[n].size(), 0.0);
            }
            for (size_t n = 0; n < grads.size(); ++n) {
                for (size_t i = 0; i < grads[n].size(); ++i) {
                    velocity[n][i] = run_cfg.momentum * velocity[n][i] + grads[n][i];
                    grads[n][i] = velocity[n][i];
                }
            }
        }

        if (run_cfg.backtracking) {
            double lr = run_cfg.learning_rate;
            bool accepted = false;
            for (int halving = 0; halving <= 10; ++halving) {
                std::vector<DepthImage> candidate = views;
                for (size_t n = 0; n < candidate.size(); ++n) {
                    for (size_t i = 0; i < candidate[n].data.size(); ++i) {
                        candidate[n].data[i] -= lr * grads[n][i];
                    }
                }
                EvalResult cand_eval = evaluate(candidate, anchor, inputs, rig, run_cfg);
                if (cand_eval.finite() && cand_eval.total <= eval.total) {
                    views = std::move(candidate);
                    eval = std::move(cand_eval);
                    accepted = true;
                    break;
                }
                lr *= 0.5;
            }
            (void)accepted;  // rejected steps keep the current iterate
        } else {
            for (size_t n = 0; n < views.size(); ++n) {
                for (size_t i = 0; i < views[n].data.size(); ++i) {
                    views[n].data[i] -= run_cfg.learning_rate * grads[n][i];
                }
            }
            eval = evaluate(views, anchor, inputs, rig, run_cfg);
        }

        report.steps.push_back({step, eval.trace.loss, eval.generator, eval.total});
        if (observer) observer(step, eval.trace);
        if (!eval.finite()) {
            report.diverged = true;
            report.diverged_at_step = step;
            report.selected_step = 0;
            report.final_views = initial_views;
            return report;
        }
        if (step >= window_start && (!have_best || eval.trace.loss < best_consistency)) {
            have_best = true;
            best_consistency = eval.trace.loss;
            report.selected_step = step;
            report.final_views = views;
        }
    }
    return report;
}

EnergyReport descriptor_optimize(const Generator& generator, const ShapeDescriptor& z0,
                                 const std::vector<DepthImage>& inputs, const CameraRig& rig,
                                 const EnergyConfig& cfg, const StepObserver& observer) {
    cfg.validate();
    if (!z0.values.allFinite()) throw std::invalid_argument("descriptor_optimize: non-finite z0");
    if (z0.dim() != generator.descriptor_dim()) {
        throw std::invalid_argument("descriptor_optimize: descriptor dimension mismatch");
    }

    ShapeDescriptor z = z0;
    const std::vector<DepthImage> anchor = generator.forward(z0, inputs);
    EnergyConfig run_cfg = cfg;
    if (run_cfg.consistency.depth_range.extent() <= 0.0) {
        run_cfg.consistency.depth_range = frozen_depth_range(anchor, inputs);
    }

    std::vector<DepthImage> views = anchor;
    const double element_count = static_cast<double>(stack_elements(views));
    const double step_scale = run_cfg.grad_scale == GradScale::kViewSum
                                  ? element_count / static_cast<double>(views.size())
                                  : 1.0;

    EnergyReport report;
    EvalResult eval = evaluate(views, anchor, inputs, rig, run_cfg);
    report.steps.push_back({0, eval.trace.loss, eval.generator, eval.total});
    report.final_views = views;
    report.final_descriptor = z;
    if (observer) observer(0, eval.trace);

    const int window_start = run_cfg.steps - run_cfg.select_window + 1;
    bool have_best = false;
    double best_consistency = 0.0;
    Eigen::VectorXd velocity;

    for (int step = 1; step <= run_cfg.steps; ++step) {
        ViewGradients upstream = consistency_loss_backward(eval.trace, views, rig);
        const ViewGradients gen_grads = generator_loss_backward(views, anchor, run_cfg.gen_norm);
        for (size_t n = 0; n < upstream.size(); ++n) {
            for (size_t i = 0; i < upstream[n].size(); ++i) {
                upstream[n][i] += run_cfg.mu * gen_grads[n][i];
            }
        }
        Eigen::VectorXd dz = generator.backward(z, inputs, upstream).values * step_scale;
        if (run_cfg.momentum > 0.0 && !run_cfg.backtracking) {
            if (velocity.size() == 0) velocity = Eigen::VectorXd::Zero(dz.size());
            velocity = run_cfg.momentum * velocity + dz;
            dz = velocity;
        }

        if (run_cfg.backtracking) {
            double lr = run_cfg.learning_rate;
            for (int halving = 0; halving <= 10; ++halving) {
                ShapeDescriptor candidate;
                candidate.values = z.values - lr * dz;
                std::vector<DepthImage> cand_views = generator.forward(candidate, inputs);
                EvalResult cand_eval = evaluate(cand_views, anchor, inputs, rig, run_cfg);
                if (cand_eval.finite() && cand_eval.total <= eval.total) {
                    z = std::move(candidate);
                    views = std::move(cand_views);
                    eval = std::move(cand_eval);
                    break;
                }
                lr *= 0.5;
            }
        } else {
            z.values -= run_cfg.learning_rate * dz;
            views = generator.forward(z, inputs);
            eval = evaluate(views, anchor, inputs, rig, run_cfg);
        }

        report.steps.push_back({step, eval.trace.loss, eval.generator, eval.total});
        if (observer) observer(step, eval.trace);
        if (!eval.finite() || !z.values.allFinite()) {
            report.diverged = true;
            report.diverged_at_step = step;
            report.selected_step = 0;
            report.final_views = anchor;
            report.final_descriptor = z0;
            return report;
        }
        if (step >= window_start && (!have_best || eval.trace.loss < best_consistency)) {
            have_best = true;
            best_consistency = eval.trace.loss;
            report.selected_step = step;
            report.final_views = views;
            report.final_descriptor = z;
        }
    }
    return report;
}

}  // namespace mvdc
