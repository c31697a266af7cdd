#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "support.hpp"
#include "wsseg/errors.hpp"
#include "wsseg/losses.hpp"

using namespace wsseg;

namespace {

constexpr double kLn2 = 0.69314718055994530942;

std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

std::vector<double> as_vector(const RealGrid& g) { return {g.values().begin(), g.values().end()}; }

}  // namespace

TEST(ConfidenceLoss, Examples) {
    EXPECT_EQ(confidence_loss(SoftMask({3, 3}, 0.5)).value, 0.25);
    EXPECT_EQ(confidence_loss(SoftMask({3, 3}, 1.0)).value, 0.0);
    EXPECT_EQ(confidence_loss(SoftMask({3, 3}, 0.0)).value, 0.0);
    EXPECT_DOUBLE_EQ(confidence_loss(SoftMask({2, 2}, 0.25)).value, 0.1875);
}

TEST(ReconstructionLoss, Examples) {
    const Image a({2, 2}, {0.1, 0.4, 0.7, 1.0});
    const LossValue same = reconstruction_loss(a, a);
    EXPECT_EQ(same.value, 0.0);
    for (double g : same.grad.values()) EXPECT_EQ(g, 0.0);
    EXPECT_EQ(reconstruction_loss(Image({2, 3}, 0.0), Image({2, 3}, 1.0)).value, 1.0);
    EXPECT_NEAR(reconstruction_loss(Image({1, 2}, {0.2, 0.8}), Image({1, 2}, {0.5, 0.5})).value, 0.3, 1e-15);
    EXPECT_THROW(reconstruction_loss(a, Image({1, 4}, 0.0)), ShapeMismatch);
}

TEST(StatsLoss, Examples) {
    const Mask gt = Mask::from_pixels({2, 2}, {{0, 0}});
    EXPECT_EQ(stats_loss(gt, SoftMask({2, 2}, 0.25)).value, 0.0);
    EXPECT_EQ(stats_loss(Mask({2, 2}, true), SoftMask({2, 2}, 0.0)).value, 1.0);
    EXPECT_NEAR(stats_loss(gt, SoftMask({2, 2}, 0.1)).value, 0.15, 1e-15);
    EXPECT_NEAR(stats_loss(0.25, SoftMask({2, 2}, 0.1)).value, 0.15, 1e-15);
}

TEST(StatsLoss, ConstantAtRatioIsAGlobalMinimum) {
    const Mask gt = fixtures::filled({8, 8}, 2, 2, 3, 3);
    const LossValue l = stats_loss(gt, SoftMask({8, 8}, summary_stat(gt)));
    EXPECT_EQ(l.value, 0.0);
    for (double g : l.grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(WeakSupervisionLoss, Examples) {
    std::mt19937_64 rng(5);
    const SoftMask pred({3, 3}, uniform_values(rng, 9, 0.0, 1.0));
    const LossValue zero = weak_supervision_loss(Mask({3, 3}, false), pred);
    EXPECT_EQ(zero.value, 0.0);
    for (double g : zero.grad.values()) EXPECT_EQ(g, 0.0);

    EXPECT_NEAR(weak_supervision_loss(Mask({1, 1}, true), SoftMask({1, 1}, 0.5)).value, kLn2, 1e-12);
    EXPECT_NEAR(weak_supervision_loss(Mask({1, 1}, true), SoftMask({1, 1}, 1.0 - kLogClamp)).value, 0.0, 1e-6);
}

TEST(WeakSupervisionLoss, OutsideWeakPixelsContributeNothing) {
    std::mt19937_64 rng(9);
    const Mask weak = Mask::from_pixels({4, 4}, {{1, 1}, {2, 2}});
    std::vector<double> v = uniform_values(rng, 16, 0.05, 0.95);
    const LossValue base = weak_supervision_loss(weak, SoftMask({4, 4}, v));
    v[0] = 0.0;  // would be -log(eps) if it counted
    v[15] = 1.0;
    const LossValue moved = weak_supervision_loss(weak, SoftMask({4, 4}, v));
    EXPECT_EQ(base.value, moved.value);
    EXPECT_EQ(moved.grad[0], 0.0);
    EXPECT_EQ(moved.grad[15], 0.0);
}

TEST(WeakSupervisionLoss, ClampsZeroPrediction) {
    const LossValue l = weak_supervision_loss(Mask({1, 1}, true), SoftMask({1, 1}, 0.0));
    EXPECT_NEAR(l.value, -std::log(kLogClamp), 1e-9);
    EXPECT_TRUE(std::isfinite(l.grad[0]));
}

TEST(FullSupervisionLoss, Examples) {
    EXPECT_NEAR(full_supervision_loss(Mask({1, 1}, true), SoftMask({1, 1}, 0.5)).value, kLn2, 1e-12);
    EXPECT_NEAR(full_supervision_loss(Mask::from_pixels({1, 2}, {{0, 0}}), SoftMask({1, 2}, {0.9, 0.1})).value, 0.105361, 1e-6);
    const Mask gt = fixtures::filled({3, 3}, 0, 0, 2, 2);
    std::vector<double> v(9);
    for (std::size_t i = 0; i < 9; ++i) v[i] = gt[i] ? 1.0 : 0.0;
    EXPECT_NEAR(full_supervision_loss(gt, SoftMask({3, 3}, v)).value, 0.0, 1e-6);
}

TEST(TotalLoss, Examples) {
    const Image input({2, 2}, 0.3);
    const Mask gt = Mask::from_pixels({2, 2}, {{0, 0}});
    const Mask weak = gt;
    const SoftMask half({2, 2}, 0.5);
    const Image recon({2, 2}, 0.5);

    EXPECT_EQ(total_loss(input, gt, weak, half, recon, LossWeights{0, 0, 0, 0, 0}).report.total, 0.0);
    EXPECT_EQ(total_loss(input, gt, weak, half, recon, LossWeights{1, 0, 0, 0, 0}).report.total, 0.25);

    // stats 0.15 (pred 0.1 vs 0.25) + weak on a 1x1 grid at 0.5.
    const LossValue s = stats_loss(gt, SoftMask({2, 2}, 0.1));
    const LossValue w = weak_supervision_loss(Mask({1, 1}, true), SoftMask({1, 1}, 0.5));
    EXPECT_NEAR(s.value + w.value, 0.843147, 1e-6);

    const TotalLoss t = total_loss(input, gt, weak, SoftMask({2, 2}, 0.1), recon, LossWeights{0, 0, 1, 1, 0});
    ASSERT_TRUE(t.report.stats && t.report.weak);
    EXPECT_FALSE(t.report.confidence.has_value());
    EXPECT_NEAR(t.report.total, *t.report.stats + *t.report.weak, 1e-15);
}

TEST(TotalLoss, WeightedSumOfTerms) {
    std::mt19937_64 rng(21);
    const GridShape sh{5, 5};
    const Image input(sh, uniform_values(rng, 25, 0, 1));
    const Image recon(sh, uniform_values(rng, 25, 0, 1));
    const SoftMask pred(sh, uniform_values(rng, 25, 0.01, 0.99));
    const Mask gt = fixtures::filled(sh, 1, 1, 3, 3);
    const Mask weak = Mask::from_pixels(sh, {{2, 2}});
    const LossWeights w{0.5, 2.0, 3.0, 0.25, 1.5};
    const TotalLoss t = total_loss(input, gt, weak, pred, recon, w);
    const double expect = 0.5 * confidence_loss(pred).value + 2.0 * reconstruction_loss(input, recon).value +
                          3.0 * stats_loss(gt, pred).value + 0.25 * weak_supervision_loss(weak, pred).value +
                          1.5 * full_supervision_loss(gt, pred).value;
    EXPECT_NEAR(t.report.total, expect, 1e-12);
}

TEST(TotalLoss, MissingInputsForActiveTerm) {
    const SoftMask pred({2, 2}, 0.5);
    LossTargets none;
    EXPECT_THROW(total_loss(none, pred, nullptr, LossWeights{0, 1, 0, 0, 0}), InvalidConfig);
    EXPECT_THROW(total_loss(none, pred, nullptr, LossWeights{0, 0, 1, 0, 0}), InvalidConfig);
    EXPECT_THROW(total_loss(none, pred, nullptr, LossWeights{0, 0, 0, 1, 0}), InvalidConfig);
    EXPECT_THROW(total_loss(none, pred, nullptr, LossWeights{0, 0, 0, 0, 1}), InvalidConfig);
    EXPECT_NO_THROW(total_loss(none, pred, nullptr, LossWeights{1, 0, 0, 0, 0}));
}

TEST(LossWeights, Validation) {
    EXPECT_THROW((LossWeights{-1, 0, 0, 0, 0}.validate()), InvalidConfig);
    EXPECT_THROW((LossWeights{0, std::nan(""), 0, 0, 0}.validate()), InvalidConfig);
    EXPECT_NO_THROW(LossWeights{}.validate());
}

// Finite differences on 5x5 inputs; values kept away from the kinks of |.| and the log clamp.
TEST(LossGradients, MatchCentralDifferences) {
    const GridShape sh{5, 5};
    const double h = 1e-5, tol = 1e-4, floor = 1e-6;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const std::vector<double> p = uniform_values(rng, 25, 0.05, 0.95);
        const Mask gt = fixtures::random_mask(rng, sh, 0.4).with({2, 2}, true);
        const Mask weak = fixtures::random_mask(rng, sh, 0.3);
        const Image input(sh, uniform_values(rng, 25, 0, 1));
        std::vector<double> recon = uniform_values(rng, 25, 0, 1);
        for (std::size_t i = 0; i < 25; ++i)
            if (std::abs(recon[i] - input[i]) < 1e-3) recon[i] = input[i] + (input[i] < 0.5 ? 0.01 : -0.01);
        double ratio = summary_stat(SoftMask(sh, p)) + (seed % 2 ? 0.05 : -0.05);

        auto run = [&](auto loss_of, const std::vector<double>& x0) {
            const LossValue a = loss_of(x0);
            return fixtures::check_grid_gradient(x0, as_vector(a.grad), [&](const std::vector<double>& x) { return loss_of(x).value; }, h,
                                                tol, floor);
        };
        const auto check = [&](const fixtures::GradCheck& r, const char* name) {
            EXPECT_EQ(r.failed, 0u) << name << " seed " << seed << " worst " << r.worst;
        };
        check(run([&](const std::vector<double>& x) { return confidence_loss(SoftMask(sh, x)); }, p), "L_c");
        check(run([&](const std::vector<double>& x) { return reconstruction_loss(input, Image(sh, x)); }, recon), "L_r");
        check(run([&](const std::vector<double>& x) { return stats_loss(ratio, SoftMask(sh, x)); }, p), "L_s");
        check(run([&](const std::vector<double>& x) { return weak_supervision_loss(weak, SoftMask(sh, x)); }, p), "L_ws");
        check(run([&](const std::vector<double>& x) { return full_supervision_loss(gt, SoftMask(sh, x)); }, p), "L_full");
    }
}
