#pragma once

#include "mvdc/camera.hpp"
#include "mvdc/depth_image.hpp"

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace mvdc {

/// Latent vector optimized during inference.
struct ShapeDescriptor {
    Eigen::VectorXd values;

    int dim() const { return static_cast<int>(values.size()); }
};

/// Per-view, per-pixel gradient grids (same layout as DepthImage::data).
using ViewGradients = std::vector<std::vector<double>>;

struct InitialDescriptor {
    ShapeDescriptor z;
    bool fallback = false;  // fit was degenerate, z is all-zero
};

/// Differentiable mapping from a shape descriptor (conditioned on the input
/// views) to N completed depth images. backward is the vector-Jacobian
/// product of forward. Both are deterministic and thread-safe.
class Generator {
 public:
    virtual ~Generator() = default;

    virtual int descriptor_dim() const = 0;
    virtual std::vector<DepthImage> forward(const ShapeDescriptor& z,
                                            const std::vector<DepthImage>& inputs) const = 0;
    virtual ShapeDescriptor backward(const ShapeDescriptor& z,
                                     const std::vector<DepthImage>& inputs,
                                     const ViewGradients& upstream) const = 0;
    virtual InitialDescriptor initial_descriptor(const std::vector<DepthImage>& inputs) const = 0;
};

struct RbfGeneratorConfig {
    std::vector<Point3> centers;      // RBF centers on/near the base surface
    double bandwidth = 0.35;          // RBF sigma; support truncated at 4 sigma
    double background_depth = 4.0;
    double temperature_fraction = 0.01;  // soft-min temperature as a fraction of depth range
    double ridge = 1e-6;              // regularizer of the initial-descriptor fit
};

/// Toy generator: a base point cloud displaced radially by an RBF field with
/// weights z, rendered through a differentiable soft rasterizer. The inputs
/// only condition the initial descriptor fit; forward ignores their content.
class RbfShapeGenerator final : public Generator {
 public:
    RbfShapeGenerator(std::vector<Point3> base_points, RbfGeneratorConfig config, CameraRig rig);

    int descriptor_dim() const override { return static_cast<int>(config_.centers.size()); }
    std::vector<DepthImage> forward(const ShapeDescriptor& z,
                                    const std::vector<DepthImage>& inputs) const override;
    ShapeDescriptor backward(const ShapeDescriptor& z, const std::vector<DepthImage>& inputs,
                             const ViewGradients& upstream) const override;
    InitialDescriptor initial_descriptor(const std::vector<DepthImage>& inputs) const override;

    /// Renders a point cloud with blended sub-pixel splats; every output
    /// pixel is differentiable in the contributing point positions.
    DepthImage soft_render(const std::vector<Point3>& points, const View& view) const;

    const CameraRig& rig() const { return rig_; }
    const std::vector<Point3>& base_points() const { return base_points_; }
    double temperature() const { return temperature_; }

    /// Points after applying the radial displacement field.
    std::vector<Point3> displace(const ShapeDescriptor& z) const;

 private:
    struct Splat;  // per-point, per-pixel contribution record

    bool fit_correction(const std::vector<DepthImage>& inputs, const ShapeDescriptor& reference,
                        Eigen::VectorXd* correction) const;

    void accumulate_view(const std::vector<Point3>& points, const View& view,
                         std::vector<double>& min_depth, std::vector<double>& weight_sum,
                         std::vector<double>& weighted_depth, std::vector<double>& coverage,
                         std::vector<Splat>* splats) const;

    std::vector<Point3> base_points_;
    RbfGeneratorConfig config_;
    CameraRig rig_;
    double temperature_ = 0.0;
    std::vector<std::vector<std::pair<int, double>>> basis_;  // per point: (center, phi)
};

}  // namespace mvdc
