#pragma once

#include <span>
#include <vector>

#include "wsseg/data.hpp"
#include "wsseg/grid.hpp"
#include "wsseg/model.hpp"

namespace wsseg {

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr double kDegenerateMaxStd = 0.05;
inline constexpr double kDegenerateMeanTolerance = 0.10;

/// 1 where pred >= threshold (inclusive).
Mask binarize(const SoftMask& pred, double threshold = kDefaultThreshold);

/// |pred & gt| / |pred | gt|, with 1.0 when both are empty. Throws ShapeMismatch.
double iou(const Mask& pred, const Mask& gt);

struct DegeneracyCheck {
    bool degenerate = false;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

/// Flags the constant-output failure: std(pred) < 0.05 and |mean(pred) - target_ratio| < 0.10.
DegeneracyCheck detect_degenerate(const SoftMask& pred, double target_ratio);

struct EvalReport {
    double mean_iou = 0.0;
    std::vector<double> per_sample_iou;
    std::vector<DegeneracyCheck> per_sample_degeneracy;
    std::size_t degenerate_count = 0;
    bool degenerate = false;  // strict majority of samples flagged
    double pooled_mean = 0.0;  // over every predicted pixel of the set
    double pooled_std = 0.0;
    double threshold = kDefaultThreshold;
};

/// Scores `params` on every sample: IoU of the binarized prediction against gt, and the degeneracy
/// test against the sample's summary statistic. An empty sample set yields an all-zero report.
EvalReport evaluate(const ModelParams& params, std::span<const Sample> samples, double threshold = kDefaultThreshold);
EvalReport evaluate(const ModelParams& params, std::span<const Sample* const> samples, double threshold = kDefaultThreshold);

}  // namespace wsseg
