#include "wsseg/losses.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "wsseg/errors.hpp"

namespace wsseg {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

double clamp_prob(double p) { return std::clamp(p, kLogClamp, 1.0 - kLogClamp); }

bool clamp_active(double p) { return p < kLogClamp || p > 1.0 - kLogClamp; }

void add_scaled(RealGrid& acc, const RealGrid& g, double w) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * g[i];
}

}  // namespace

LossValue confidence_loss(const SoftMask& pred) {
    const double n = static_cast<double>(pred.size());
    LossValue out{0.0, RealGrid(pred.shape(), 0.0)};
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = 0.5 - pred[i];
        sq += d * d;
        out.grad[i] = 2.0 * d / n;
    }
    out.value = 0.25 - sq / n;
    return out;
}

LossValue reconstruction_loss(const Image& input, const Image& recon) {
    require_same_shape(input.shape(), recon.shape(), "reconstruction_loss");
    const double n = static_cast<double>(input.size());
    LossValue out{0.0, RealGrid(input.shape(), 0.0)};
    double sum = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double d = recon[i] - input[i];
        sum += std::abs(d);
        out.grad[i] = sign(d) / n;
    }
    out.value = sum / n;
    return out;
}

LossValue stats_loss(double target_ratio, const SoftMask& pred) {
    const double n = static_cast<double>(pred.size());
    const double diff = summary_stat(pred) - target_ratio;
    return LossValue{std::abs(diff), RealGrid(pred.shape(), sign(diff) / n)};
}

LossValue stats_loss(const Mask& gt, const SoftMask& pred) {
    require_same_shape(gt.shape(), pred.shape(), "stats_loss");
    return stats_loss(summary_stat(gt), pred);
}

LossValue weak_supervision_loss(const Mask& weak, const SoftMask& pred) {
    require_same_shape(weak.shape(), pred.shape(), "weak_supervision_loss");
    const double n = static_cast<double>(pred.size());
    LossValue out{0.0, RealGrid(pred.shape(), 0.0)};
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!weak[i]) continue;  // -(1 - 0) * log(1 - 0) == 0, no clamp applied
        const double p = pred[i];
        sum += -std::log(clamp_prob(p));
        if (!clamp_active(p)) out.grad[i] = -1.0 / (p * n);
    }
    out.value = sum / n;
    return out;
}

LossValue full_supervision_loss(const Mask& gt, const SoftMask& pred) {
    require_same_shape(gt.shape(), pred.shape(), "full_supervision_loss");
    const double n = static_cast<double>(pred.size());
    LossValue out{0.0, RealGrid(pred.shape(), 0.0)};
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double y = gt[i] ? 1.0 : 0.0;
        const double p = pred[i];
        const double pc = clamp_prob(p);
        sum += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
        if (!clamp_active(p)) out.grad[i] = (-y / p + (1.0 - y) / (1.0 - p)) / n;
    }
    out.value = sum / n;
    return out;
}

void LossWeights::validate() const {
    const std::pair<const char*, double> all[] = {
        {"confidence", confidence}, {"reconstruction", reconstruction}, {"stats", stats}, {"weak", weak}, {"full", full}};
    for (const auto& [name, w] : all) {
        if (!std::isfinite(w) || w < 0.0) throw InvalidConfig(fmt::format("loss weight '{}' must be finite and >= 0, got {}", name, w));
    }
}

TotalLoss total_loss(const LossTargets& targets, const SoftMask& pred, const Image* recon, const LossWeights& weights) {
    weights.validate();
    TotalLoss out{{}, RealGrid(pred.shape(), 0.0), RealGrid(pred.shape(), 0.0)};
    LossReport& rep = out.report;

    if (weights.confidence > 0.0) {
        const LossValue l = confidence_loss(pred);
        rep.confidence = l.value;
        rep.total += weights.confidence * l.value;
        add_scaled(out.d_pred, l.grad, weights.confidence);
    }
    if (weights.reconstruction > 0.0) {
        if (targets.input == nullptr || recon == nullptr) throw InvalidConfig("reconstruction loss is active but input or recon is missing");
        require_same_shape(recon->shape(), pred.shape(), "total_loss");
        const LossValue l = reconstruction_loss(*targets.input, *recon);
        rep.reconstruction = l.value;
        rep.total += weights.reconstruction * l.value;
        add_scaled(out.d_recon, l.grad, weights.reconstruction);
    }
    if (weights.stats > 0.0) {
        double stat = 0.0;
        if (targets.stat) {
            stat = *targets.stat;
        } else if (targets.gt != nullptr) {
            require_same_shape(targets.gt->shape(), pred.shape(), "total_loss");
            stat = summary_stat(*targets.gt);
        } else {
            throw InvalidConfig("statistics loss is active but no summary statistic is available");
        }
        const LossValue l = stats_loss(stat, pred);
        rep.stats = l.value;
        rep.total += weights.stats * l.value;
        add_scaled(out.d_pred, l.grad, weights.stats);
    }
    if (weights.weak > 0.0) {
        if (targets.weak == nullptr) throw InvalidConfig("weak supervision loss is active but no weak mask is given");
        const LossValue l = weak_supervision_loss(*targets.weak, pred);
        rep.weak = l.value;
        rep.total += weights.weak * l.value;
        add_scaled(out.d_pred, l.grad, weights.weak);
    }
    if (weights.full > 0.0) {
        if (targets.gt == nullptr) throw InvalidConfig("full supervision loss is active but no ground truth is given");
        const LossValue l = full_supervision_loss(*targets.gt, pred);
        rep.full = l.value;
        rep.total += weights.full * l.value;
        add_scaled(out.d_pred, l.grad, weights.full);
    }
    return out;
}

TotalLoss total_loss(const Image& input, const Mask& gt, const Mask& weak, const SoftMask& pred, const Image& recon,
                     const LossWeights& weights) {
    LossTargets t;
    t.input = &input;
    t.gt = &gt;
    t.weak = &weak;
    return total_loss(t, pred, &recon, weights);
}

}  // namespace wsseg
