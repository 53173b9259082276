#include "mvdc/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mvdc {

struct KdTree::Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
};

KdTree::KdTree(const std::vector<Point3>& points) : points_(points) {
    if (points_.empty()) throw std::domain_error("KdTree: empty cloud");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(points_.size());
    root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
    if (begin >= end) return -1;
    const int axis = depth % 3;
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         if (ca != cb) return ca < cb;
                         return a < b;
                     });
    const int node_index = static_cast<int>(nodes_.size());
    nodes_.push_back({order_[mid], axis, -1, -1});
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid + 1, end, depth + 1);
    nodes_[node_index].left = left;
    nodes_[node_index].right = right;
    return node_index;
}

void KdTree::search(int node, const Point3& query, Hit& best) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const double d = (points_[n.point] - query).norm();
    if (best.index < 0 || d < best.distance) best = {n.point, d};
    const double delta = query[n.axis] - points_[n.point][n.axis];
    const int near = delta <= 0.0 ? n.left : n.right;
    const int far = delta <= 0.0 ? n.right : n.left;
    search(near, query, best);
    if (std::abs(delta) < best.distance) search(far, query, best);
}

KdTree::Hit KdTree::nearest(const Point3& query) const {
    Hit best;
    search(root_, query, best);
    return best;
}

void KdTree::search_radius(int node, const Point3& query, double radius2,
                           std::vector<Hit>& hits) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const double d2 = (points_[n.point] - query).squaredNorm();
    if (d2 <= radius2) hits.push_back({n.point, std::sqrt(d2)});
    const double delta = query[n.axis] - points_[n.point][n.axis];
    const int near = delta <= 0.0 ? n.left : n.right;
    const int far = delta <= 0.0 ? n.right : n.left;
    search_radius(near, query, radius2, hits);
    if (delta * delta <= radius2) search_radius(far, query, radius2, hits);
}

std::vector<KdTree::Hit> KdTree::radius_search(const Point3& query, double radius,
                                               int max_hits) const {
    std::vector<Hit> hits;
    search_radius(root_, query, radius * radius, hits);
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.index < b.index;
    });
    if (max_hits >= 0 && static_cast<int>(hits.size()) > max_hits) hits.resize(max_hits);
    return hits;
}

PointCloud fuse_views(const std::vector<DepthImage>& views, const CameraRig& rig) {
    if (static_cast<int>(views.size()) != rig.size()) {
        throw std::invalid_argument("fuse_views: view count mismatch");
    }
    PointCloud cloud;
    for (int n = 0; n < rig.size(); ++n) {
        const DepthImage& view = views[n];
        for (int y = 0; y < view.height; ++y) {
            for (int x = 0; x < view.width; ++x) {
                if (!view.is_foreground(x, y)) continue;
                cloud.points.push_back(
                    back_project({static_cast<double>(x), static_cast<double>(y), view.at(x, y)},
                                 rig.views[n].pose, rig.views[n].intrinsics));
            }
        }
    }
    return cloud;
}

double chamfer_distance(const PointCloud& a, const PointCloud& b, bool squared) {
    if (a.points.empty() || b.points.empty()) {
        throw std::domain_error("chamfer_distance: empty cloud");
    }
    const KdTree tree_a(a.points);
    const KdTree tree_b(b.points);
    double sum_ab = 0.0;
    for (const Point3& p : a.points) {
        const double d = tree_b.nearest(p).distance;
        sum_ab += squared ? d * d : d;
    }
    double sum_ba = 0.0;
    for (const Point3& p : b.points) {
        const double d = tree_a.nearest(p).distance;
        sum_ba += squared ? d * d : d;
    }
    return sum_ab / static_cast<double>(a.points.size()) +
           sum_ba / static_cast<double>(b.points.size());
}

double gt_view_distance(const std::vector<DepthImage>& v, const std::vector<DepthImage>& gt,
                        NormKind norm) {
    return generator_loss(v, gt, norm);
}

PointCloud estimate_normals(const PointCloud& cloud, const CameraRig& rig, double radius,
                            int max_neighbors) {
    if (radius <= 0.0) throw std::invalid_argument("estimate_normals: radius must be > 0");
    PointCloud out = cloud;
    out.normals.assign(cloud.points.size(), Eigen::Vector3d::Zero());
    if (cloud.points.empty()) return out;
    const KdTree tree(cloud.points);

    std::vector<Eigen::Vector3d> centers;
    centers.reserve(rig.views.size());
    for (const View& view : rig.views) centers.push_back(view.pose.center());

    for (size_t i = 0; i < cloud.points.size(); ++i) {
        const auto hits = tree.radius_search(cloud.points[i], radius, max_neighbors);
        if (hits.size() < 3) continue;  // degenerate, keep the zero flag

        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (const auto& h : hits) mean += cloud.points[h.index];
        mean /= static_cast<double>(hits.size());
        Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
        for (const auto& h : hits) {
            const Eigen::Vector3d d = cloud.points[h.index] - mean;
            covariance += d * d.transpose();
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance);
        Eigen::Vector3d normal = solver.eigenvectors().col(0);  // least eigenvalue

        double best_dist = 1e300;
        Eigen::Vector3d best_center = Eigen::Vector3d::Zero();
        for (const Eigen::Vector3d& c : centers) {
            const double d = (c - cloud.points[i]).norm();
            if (d < best_dist) {
                best_dist = d;
                best_center = c;
            }
        }
        if (normal.dot(best_center - cloud.points[i]) < 0.0) normal = -normal;
        out.normals[i] = normal;
    }
    return out;
}

}  // namespace mvdc
