#pragma once

#include "mvdc/camera.hpp"
#include "mvdc/depth_image.hpp"
#include "mvdc/energy.hpp"

#include <vector>

namespace mvdc {

struct PointCloud {
    std::vector<Point3> points;
    std::vector<Eigen::Vector3d> normals;  // empty, or one unit normal per point

    size_t size() const { return points.size(); }
    bool has_normals() const { return !normals.empty(); }
};

/// Exact nearest-neighbor index over 3D points (median-split k-d tree).
/// Queries return the same distances as a linear scan.
class KdTree {
 public:
    explicit KdTree(const std::vector<Point3>& points);

    struct Hit {
        int index = -1;
        double distance = 0.0;
    };

    Hit nearest(const Point3& query) const;

    /// Hits within `radius`, nearest first (ties by index), at most max_hits.
    std::vector<Hit> radius_search(const Point3& query, double radius, int max_hits) const;

 private:
    struct Node;
    int build(int begin, int end, int depth);
    void search(int node, const Point3& query, Hit& best) const;
    void search_radius(int node, const Point3& query, double radius2,
                       std::vector<Hit>& hits) const;

    const std::vector<Point3>& points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

/// Back-projects every foreground pixel of every view, view-major row-major.
PointCloud fuse_views(const std::vector<DepthImage>& views, const CameraRig& rig);

/// Symmetric mean nearest-neighbor distance:
/// CD(A,B) = mean_a min_b |a-b| + mean_b min_a |b-a|, unsquared by default.
/// Throws std::domain_error on an empty cloud.
double chamfer_distance(const PointCloud& a, const PointCloud& b, bool squared = false);

/// Same mean-per-element norm as generator_loss, against ground-truth views.
double gt_view_distance(const std::vector<DepthImage>& v, const std::vector<DepthImage>& gt,
                        NormKind norm);

/// Per-point PCA normals over neighbors within `radius` (nearest
/// max_neighbors), oriented toward the nearest rig camera center. Points with
/// fewer than 3 neighbors get a zero normal.
PointCloud estimate_normals(const PointCloud& cloud, const CameraRig& rig, double radius = 0.5,
                            int max_neighbors = 30);

}  // namespace mvdc
