#pragma once

#include <optional>

#include "wsseg/grid.hpp"

namespace wsseg {

/// Lower/upper clamp applied before every logarithm.
inline constexpr double kLogClamp = 1e-7;

/// Scalar loss and its gradient with respect to the predicted grid.
struct LossValue {
    double value = 0.0;
    RealGrid grad;
};

/// 0.25 - mean((0.5 - pred)^2). Peaks at 0.25 when every pixel is 0.5, zero on binary output.
LossValue confidence_loss(const SoftMask& pred);

/// Mean absolute error between the input image and its reconstruction. Gradient is w.r.t. recon,
/// with sign(0) taken as 0.
LossValue reconstruction_loss(const Image& input, const Image& recon);

/// |target_ratio - summary_stat(pred)|; target_ratio is the recorded summary statistic.
LossValue stats_loss(double target_ratio, const SoftMask& pred);
LossValue stats_loss(const Mask& gt, const SoftMask& pred);

/// Cross-entropy restricted to the weak mask. Pixels with weak = 0 contribute exactly 0 to both
/// value and gradient, so the loss only ever pulls predictions up.
/// Throws ShapeMismatch.
LossValue weak_supervision_loss(const Mask& weak, const SoftMask& pred);

/// Mean binary cross-entropy against the full ground truth (the fully supervised baseline).
LossValue full_supervision_loss(const Mask& gt, const SoftMask& pred);

struct LossWeights {
    double confidence = 1.0;
    double reconstruction = 1.0;
    double stats = 1.0;
    double weak = 1.0;
    double full = 0.0;

    /// Throws InvalidConfig on negative or non-finite weights.
    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

/// Per-term values of the active terms (weight > 0) plus the weighted total.
struct LossReport {
    std::optional<double> confidence;
    std::optional<double> reconstruction;
    std::optional<double> stats;
    std::optional<double> weak;
    std::optional<double> full;
    double total = 0.0;
};

/// What each term compares against. Only the fields required by active terms must be set.
struct LossTargets {
    const Image* input = nullptr;        // reconstruction
    std::optional<double> stat;          // statistics; falls back to summary_stat(*gt)
    const Mask* weak = nullptr;          // weak supervision
    const Mask* gt = nullptr;            // full supervision
};

struct TotalLoss {
    LossReport report;
    RealGrid d_pred;   // d total / d pred
    RealGrid d_recon;  // d total / d recon (zero when reconstruction is inactive)
};

/// Weighted sum of the active terms. Throws InvalidConfig when an active term lacks its inputs.
TotalLoss total_loss(const LossTargets& targets, const SoftMask& pred, const Image* recon, const LossWeights& weights);

TotalLoss total_loss(const Image& input, const Mask& gt, const Mask& weak, const SoftMask& pred, const Image& recon,
                     const LossWeights& weights);

}  // namespace wsseg
