#pragma once

#include "mvdc/consistency.hpp"
#include "mvdc/generator.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mvdc {

enum class NormKind { kL1, kL2 };

/// Scale convention for the descent step. kMean uses the gradients of the
/// per-element-normalized objective as-is; kViewSum rescales them by H*W
/// (the per-view pixel count), so the configured rate acts on gradients of
/// the view-averaged, pixel-summed objective. Direct depth optimization
/// defaults to kViewSum: its calibrated rate (6e-4) then moves pixels by a
/// useful fraction of the noise scale per step while settling well below it,
/// which the mean-normalized gradients (~1/(N*H*W) per pixel) cannot.
enum class GradScale { kMean, kViewSum };

struct EnergyConfig {
    double mu = 1.0;
    NormKind gen_norm = NormKind::kL2;
    int steps = 100;
    double learning_rate = 0.2;
    int select_window = 10;
    GradScale grad_scale = GradScale::kMean;
    double momentum = 0.0;     // 0 disables; ignored while backtracking
    bool backtracking = false;  // halve the step (up to 10x) on total-loss increase
    int threads = 1;
    ConsistencyConfig consistency;

    void validate() const;

    static EnergyConfig direct_defaults();
    static EnergyConfig descriptor_defaults();
};

struct StepRecord {
    int step = 0;  // 0 is the initial state
    double consistency = 0.0;
    double generator = 0.0;
    double total = 0.0;
};

struct EnergyReport {
    std::vector<StepRecord> steps;
    int selected_step = 0;  // smallest consistency loss in the trailing window
    bool diverged = false;
    int diverged_at_step = -1;
    std::vector<DepthImage> final_views;   // snapshot at selected_step
    ShapeDescriptor final_descriptor;      // descriptor mode only

    double initial_consistency() const { return steps.front().consistency; }
    double selected_consistency() const { return steps[selected_step].consistency; }
    int window_start(int select_window) const;
};

struct TotalLoss {
    double total = 0.0;
    double consistency = 0.0;
    double generator = 0.0;
};

/// Mean-per-element norm of V - Y: L1 = mean |.|, L2 = sqrt(mean (.)^2).
double generator_loss(const std::vector<DepthImage>& v, const std::vector<DepthImage>& y,
                      NormKind norm);

/// Gradient of generator_loss with respect to every pixel of v.
ViewGradients generator_loss_backward(const std::vector<DepthImage>& v,
                                      const std::vector<DepthImage>& y, NormKind norm);

/// Consistency loss + mu * generator loss (both components reported).
TotalLoss total_loss(const std::vector<DepthImage>& v, const std::vector<DepthImage>& y,
                     const std::vector<DepthImage>& inputs, const CameraRig& rig,
                     const EnergyConfig& cfg);

/// d(consistency loss)/d(view depths), holding the forward pass's discrete
/// assignments (sub-cell winners, pooled argmins, outlier mask) fixed. Each
/// surviving loss-map entry |r - v_t| sends sign(r - v_t) * dr/dd / (N*H*W)
/// to its winning source pixel and the opposite sign to the target pixel.
/// Gradients flow through reprojected depth values only, not locations.
/// Throws std::invalid_argument when the trace does not match the views.
ViewGradients consistency_loss_backward(const ConsistencyTrace& trace,
                                        const std::vector<DepthImage>& views,
                                        const CameraRig& rig);

/// Called after every evaluated step (including step 0) with that step's
/// forward trace; used for per-step loss-map dumps.
using StepObserver = std::function<void(int step, const ConsistencyTrace& trace)>;

/// Gradient descent on all depth pixels jointly against the total loss, with
/// Y frozen to the initial views. The outlier threshold's depth range is
/// frozen from the input views (falling back to the initial views when the
/// inputs are all background). Returns the views of the step with the
/// smallest consistency loss in the trailing select window.
EnergyReport direct_optimize(const std::vector<DepthImage>& initial_views,
                             const std::vector<DepthImage>& inputs, const CameraRig& rig,
                             const EnergyConfig& cfg, const StepObserver& observer = nullptr);

/// Gradient descent on the shape descriptor through the generator. Y is
/// G(z0; X), computed once; the depth range is frozen from Y.
EnergyReport descriptor_optimize(const Generator& generator, const ShapeDescriptor& z0,
                                 const std::vector<DepthImage>& inputs, const CameraRig& rig,
                                 const EnergyConfig& cfg, const StepObserver& observer = nullptr);

}  // namespace mvdc
