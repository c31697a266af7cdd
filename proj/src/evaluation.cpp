#include "wsseg/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace wsseg {

Mask binarize(const SoftMask& pred, double threshold) {
    Grid<std::uint8_t> g(pred.shape(), 0);
    for (std::size_t i = 0; i < pred.size(); ++i) g[i] = pred[i] >= threshold ? 1 : 0;
    return Mask(std::move(g));
}

double iou(const Mask& pred, const Mask& gt) {
    require_same_shape(pred.shape(), gt.shape(), "iou");
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] && gt[i];
        uni += pred[i] || gt[i];
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

DegeneracyCheck detect_degenerate(const SoftMask& pred, double target_ratio) {
    const auto v = pred.values();
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / n;
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    const double sd = std::sqrt(sq / n);
    return DegeneracyCheck{sd < kDegenerateMaxStd && std::abs(mean - target_ratio) < kDegenerateMeanTolerance, mean, sd};
}

EvalReport evaluate(const ModelParams& params, std::span<const Sample* const> samples, double threshold) {
    EvalReport rep;
    rep.threshold = threshold;
    if (samples.empty()) return rep;

    double sum_iou = 0.0;
    double pix_sum = 0.0;
    double pix_sq = 0.0;
    double pix_n = 0.0;
    ForwardTrace t;
    for (const Sample* s : samples) {
        forward(params, s->image(), t);
        const double score = iou(binarize(t.pred, threshold), s->gt());
        rep.per_sample_iou.push_back(score);
        sum_iou += score;
        const DegeneracyCheck d = detect_degenerate(t.pred, s->stat());
        rep.per_sample_degeneracy.push_back(d);
        rep.degenerate_count += d.degenerate;
        for (double p : t.pred.values()) {
            pix_sum += p;
            pix_sq += p * p;
        }
        pix_n += static_cast<double>(t.pred.size());
    }
    rep.mean_iou = sum_iou / static_cast<double>(samples.size());
    rep.degenerate = 2 * rep.degenerate_count > samples.size();
    rep.pooled_mean = pix_sum / pix_n;
    rep.pooled_std = std::sqrt(std::max(0.0, pix_sq / pix_n - rep.pooled_mean * rep.pooled_mean));
    return rep;
}

EvalReport evaluate(const ModelParams& params, std::span<const Sample> samples, double threshold) {
    std::vector<const Sample*> ptrs;
    ptrs.reserve(samples.size());
    for (const Sample& s : samples) ptrs.push_back(&s);
    return evaluate(params, std::span<const Sample* const>(ptrs), threshold);
}

}  // namespace wsseg
