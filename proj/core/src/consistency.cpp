#include "mvdc/consistency.hpp"

#include "mvdc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvdc {

size_t ConsistencyDistanceMap::present_count() const {
    size_t n = 0;
    for (double v : values) {
        if (v >= 0.0) ++n;
    }
    return n;
}

double ConsistencyDistanceMap::present_mean() const {
    size_t n = 0;
    double sum = 0.0;
    for (double v : values) {
        if (v >= 0.0) {
            sum += v;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double LossMap::mean() const {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

ConsistencyDistanceMap closest_point_pooling(const ReprojectionBuffer& buffer,
                                             const DepthImage& target) {
    if (buffer.width != target.width || buffer.height != target.height) {
        throw std::invalid_argument("closest_point_pooling: dimension mismatch");
    }
    ConsistencyDistanceMap out(target.width, target.height);
    const int u = buffer.u_factor;
    const int cells_per_pixel = u * u;
    for (int y = 0; y < target.height; ++y) {
        for (int x = 0; x < target.width; ++x) {
            const size_t i = static_cast<size_t>(y) * target.width + x;
            const double target_depth = target.data[i];
            const BufferCell* cell = &buffer.cells[i * cells_per_pixel];
            double best = -1.0;
            double best_candidate = 0.0;
            int32_t best_source = -1;
            for (int c = 0; c < cells_per_pixel; ++c) {
                if (!cell[c].present()) continue;
                const double dist = std::abs(cell[c].depth - target_depth);
                if (best < 0.0 || dist < best) {
                    best = dist;
                    best_candidate = cell[c].depth;
                    best_source = cell[c].source_pixel;
                }
            }
            if (best >= 0.0) {
                out.values[i] = best;
                out.candidates[i] = best_candidate;
                out.source_pixels[i] = best_source;
            }
        }
    }
    return out;
}

ConsistencyDistanceMap suppress_outliers(const ConsistencyDistanceMap& d,
                                         const ConsistencyConfig& cfg) {
    if (cfg.depth_range.extent() <= 0.0) {
        throw std::invalid_argument("suppress_outliers: invalid depth range");
    }
    const double threshold = cfg.outlier_threshold();
    ConsistencyDistanceMap out = d;
    for (size_t i = 0; i < out.values.size(); ++i) {
        if (out.values[i] > threshold) {
            out.values[i] = ConsistencyDistanceMap::kExcluded;
            out.source_pixels[i] = -1;
            out.candidates[i] = 0.0;
        }
    }
    return out;
}

ConsistencyDistanceMap pairwise_distance(int source_index, int target_index,
                                         const std::vector<DepthImage>& views,
                                         const std::vector<DepthImage>& inputs,
                                         const CameraRig& rig, const ConsistencyConfig& cfg) {
    const int n = rig.size();
    if (source_index < 0 || source_index >= n || target_index < 0 || target_index >= n) {
        throw std::invalid_argument("pairwise_distance: view index out of range");
    }
    if (static_cast<int>(views.size()) != n || static_cast<int>(inputs.size()) != n) {
        throw std::invalid_argument("pairwise_distance: view count mismatch");
    }
    const DepthImage& target = views[target_index];
    ReprojectionBuffer buffer =
        source_index == target_index
            ? input_substitution_buffer(inputs[target_index], cfg.u_factor)
            : reproject_view(views[source_index], rig.views[source_index],
                             rig.views[target_index], cfg.u_factor);
    return suppress_outliers(closest_point_pooling(buffer, target), cfg);
}

std::vector<int> pooling_order(const CameraRig& rig, int target_index) {
    const Eigen::Vector3d target_dir = rig.views[target_index].pose.view_direction();
    std::vector<int> order(rig.size());
    for (int i = 0; i < rig.size(); ++i) order[i] = i;
    std::vector<double> angle(rig.size());
    for (int i = 0; i < rig.size(); ++i) {
        const double c = std::clamp(target_dir.dot(rig.views[i].pose.view_direction()), -1.0, 1.0);
        angle[i] = std::acos(c);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (angle[a] != angle[b]) return angle[a] < angle[b];
        return a < b;
    });
    return order;
}

LossMap consistency_pooling(std::span<const ConsistencyDistanceMap> maps,
                            std::span<const int> order, int j, PooledProvenance* provenance) {
    if (maps.empty() || j < 1 || j > static_cast<int>(order.size()) ||
        order.size() != maps.size()) {
        throw std::invalid_argument("consistency_pooling: j out of range");
    }
    const int width = maps[0].width;
    const int height = maps[0].height;
    for (const auto& m : maps) {
        if (m.width != width || m.height != height) {
            throw std::invalid_argument("consistency_pooling: map dimension mismatch");
        }
    }
    LossMap out(width, height);
    if (provenance) provenance->winner.assign(out.values.size(), -1);
    for (size_t i = 0; i < out.values.size(); ++i) {
        double best = -1.0;
        int32_t best_map = -1;
        for (int r = 0; r < j; ++r) {
            const ConsistencyDistanceMap& m = maps[order[r]];
            if (!m.present(i)) continue;
            if (best < 0.0 || m.values[i] < best) {
                best = m.values[i];
                best_map = order[r];
            }
        }
        if (best >= 0.0) {
            out.values[i] = best;
            if (provenance) provenance->winner[i] = best_map;
        }
    }
    return out;
}

ConsistencyTrace consistency_forward(const std::vector<DepthImage>& views,
                                     const std::vector<DepthImage>& inputs,
                                     const CameraRig& rig, const ConsistencyConfig& cfg,
                                     int threads) {
    const int n = rig.size();
    if (static_cast<int>(views.size()) != n || static_cast<int>(inputs.size()) != n) {
        throw std::invalid_argument("consistency_forward: view count mismatch");
    }
    if (cfg.j_views < 1 || cfg.j_views > n) {
        throw std::invalid_argument("consistency_forward: j_views out of range");
    }

    // All N^2 pairwise maps, merged by (target, source) index.
    std::vector<std::vector<ConsistencyDistanceMap>> distances(n);
    for (auto& row : distances) row.resize(n);
    parallel_for(n * n, threads, [&](int pair) {
        const int t = pair / n;
        const int s = pair % n;
        distances[t][s] = pairwise_distance(s, t, views, inputs, rig, cfg);
    });

    ConsistencyTrace trace;
    trace.n_views = n;
    trace.width = rig.width;
    trace.height = rig.height;
    trace.loss_maps.resize(n);
    trace.winners.resize(n);

    double total = 0.0;
    for (int t = 0; t < n; ++t) {
        const std::vector<int> order = pooling_order(rig, t);
        PooledProvenance prov;
        trace.loss_maps[t] =
            consistency_pooling(distances[t], order, cfg.j_views, &prov);
        auto& winners = trace.winners[t];
        winners.resize(trace.loss_maps[t].values.size());
        for (size_t i = 0; i < winners.size(); ++i) {
            const int32_t s = prov.winner[i];
            if (s >= 0) {
                winners[i] = {s, distances[t][s].source_pixels[i], distances[t][s].candidates[i]};
            }
            total += trace.loss_maps[t].values[i];
        }
    }
    trace.loss = total / (static_cast<double>(n) * rig.width * rig.height);
    return trace;
}

std::pair<double, std::vector<LossMap>> consistency_loss(const std::vector<DepthImage>& views,
                                                         const std::vector<DepthImage>& inputs,
                                                         const CameraRig& rig,
                                                         const ConsistencyConfig& cfg,
                                                         int threads) {
    ConsistencyTrace trace = consistency_forward(views, inputs, rig, cfg, threads);
    return {trace.loss, std::move(trace.loss_maps)};
}

}  // namespace mvdc
