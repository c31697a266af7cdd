#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "wsseg/errors.hpp"
#include "wsseg/evaluation.hpp"
#include "wsseg/pgm.hpp"
#include "wsseg/report.hpp"

using namespace wsseg;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double iou_oracle(const Mask& a, const Mask& b) {
    int inter = 0, uni = 0;
    for (int r = 0; r < a.height(); ++r)
        for (int c = 0; c < a.width(); ++c) {
            inter += a(r, c) && b(r, c);
            uni += a(r, c) || b(r, c);
        }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

}  // namespace

TEST(Binarize, ThresholdIsInclusive) {
    const SoftMask p({1, 3}, {0.49, 0.5, 0.51});
    EXPECT_EQ(binarize(p), Mask::from_pixels({1, 3}, {{0, 1}, {0, 2}}));
    EXPECT_EQ(binarize(p, 0.51), Mask::from_pixels({1, 3}, {{0, 2}}));
}

TEST(Iou, Examples) {
    const Mask a = fixtures::filled({4, 4}, 0, 0, 2, 2);
    EXPECT_EQ(iou(a, a), 1.0);
    EXPECT_EQ(iou(a, fixtures::filled({4, 4}, 2, 2, 2, 2)), 0.0);
    EXPECT_DOUBLE_EQ(iou(Mask::from_pixels({2, 2}, {{0, 0}, {0, 1}}), Mask::from_pixels({2, 2}, {{0, 1}, {1, 1}})), 1.0 / 3.0);
    EXPECT_EQ(iou(Mask({3, 3}, false), Mask({3, 3}, false)), 1.0);
    EXPECT_EQ(iou(Mask({4, 4}, false), a), 0.0);
    EXPECT_THROW(iou(a, Mask({3, 3}, false)), ShapeMismatch);
}

TEST(Iou, MatchesEnumerationOnRandomPairs) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const Mask a = fixtures::random_mask(rng, {6, 6}, density(rng));
        const Mask b = fixtures::random_mask(rng, {6, 6}, density(rng));
        ASSERT_EQ(iou(a, b), iou_oracle(a, b));
        ASSERT_EQ(iou(a, b), iou(b, a));
    }
}

TEST(DetectDegenerate, Examples) {
    const double ratio = 0.2;
    const DegeneracyCheck flat = detect_degenerate(SoftMask({8, 8}, ratio), ratio);
    EXPECT_TRUE(flat.degenerate);
    EXPECT_NEAR(flat.std, 0.0, 1e-15);
    EXPECT_NEAR(flat.mean, ratio, 1e-15);

    // {eps, 1-eps} mixture at the ratio: std = (1-2 eps) sqrt(r(1-r)).
    for (double r : {0.02, 0.25, 0.5, 0.98}) {
        const int n = 100, k = static_cast<int>(std::lround(r * n));
        std::vector<double> v(n, 0.01);
        for (int i = 0; i < k; ++i) v[std::size_t(i)] = 0.99;
        const DegeneracyCheck d = detect_degenerate(SoftMask({10, 10}, v), r);
        EXPECT_FALSE(d.degenerate) << r;
        EXPECT_NEAR(d.std, 0.98 * std::sqrt(r * (1 - r)), 1e-9);
        EXPECT_GT(d.std, 0.05);
    }

    EXPECT_FALSE(detect_degenerate(SoftMask({4, 4}, 0.7), 0.2).degenerate);
    EXPECT_FALSE(detect_degenerate(SoftMask({4, 4}, 1.0), 0.6).degenerate);  // 0.6 + 0.5 clipped to 1
}

TEST(Evaluate, ScoresConstantModel) {
    // All-zero params predict 0.5 everywhere: binarized to all-ones, IoU = ratio, flagged only when
    // the ratio is within 0.10 of 0.5.
    const ModelParams zero = ModelParams::zeros(ModelConfig{{8, 8}, 2, 0});
    std::vector<Sample> s;
    s.emplace_back("a", Image({8, 8}, 0.3), fixtures::filled({8, 8}, 0, 0, 4, 8), fixtures::filled({8, 8}, 1, 1, 1, 1));
    s.emplace_back("b", Image({8, 8}, 0.3), fixtures::filled({8, 8}, 0, 0, 2, 4), fixtures::filled({8, 8}, 1, 1, 1, 1));
    const EvalReport r = evaluate(zero, s);
    ASSERT_EQ(r.per_sample_iou.size(), 2u);
    EXPECT_DOUBLE_EQ(r.per_sample_iou[0], 0.5);
    EXPECT_DOUBLE_EQ(r.per_sample_iou[1], 0.125);
    EXPECT_DOUBLE_EQ(r.mean_iou, 0.3125);
    EXPECT_EQ(r.degenerate_count, 1u);
    EXPECT_FALSE(r.degenerate);  // 1 of 2 is not a strict majority
    EXPECT_DOUBLE_EQ(r.pooled_mean, 0.5);
    EXPECT_EQ(r.pooled_std, 0.0);

    const EvalReport none = evaluate(zero, std::span<const Sample>{});
    EXPECT_EQ(none.mean_iou, 0.0);
    EXPECT_TRUE(none.per_sample_iou.empty());
}

TEST(EmitReport, EmptyRecordListWritesHeaderOnly) {
    fixtures::TempDir dir("report_empty");
    emit_report({}, dir.path());
    EXPECT_EQ(slurp(dir.path() / "results.csv"), "mode,coverage,final_iou,degenerate,mean_pred,std_pred,epochs,seed\n");
}

TEST(EmitReport, RowsAndOverlaysRoundTrip) {
    fixtures::TempDir dir("report");
    RunRecord rec;
    rec.config = AblationConfig::for_mode(AblationMode::combined, 0.04, 3);
    rec.config.epochs = 2;
    rec.name = rec.config.run_name();
    rec.final_eval.mean_iou = 0.5;
    rec.final_eval.pooled_mean = 0.25;
    rec.final_eval.pooled_std = 0.125;
    const Image input({4, 4}, std::vector<double>{0, 0.2, 0.4, 1, 0, 0.2, 0.4, 1, 0, 0.2, 0.4, 1, 0, 0.2, 0.4, 1});
    const Mask gt = fixtures::filled({4, 4}, 1, 1, 2, 2);
    rec.overlays.push_back({"s0", input, gt, Mask::from_pixels({4, 4}, {{1, 1}}), fixtures::filled({4, 4}, 0, 0, 2, 2)});
    RunRecord stats = rec;
    stats.config = AblationConfig::for_mode(AblationMode::stats_only, 0.08, 3);
    stats.name = stats.config.run_name();
    stats.final_eval.degenerate = true;
    stats.overlays.clear();

    const std::vector<RunRecord> records{rec, stats};
    emit_report(records, dir.path());
    EXPECT_EQ(slurp(dir.path() / "results.csv"),
              "mode,coverage,final_iou,degenerate,mean_pred,std_pred,epochs,seed\n"
              "combined,0.04,0.500000,0,0.250000,0.125000,2,3\n"
              "stats_only,na,0.500000,1,0.250000,0.125000,30,3\n");

    const auto run_dir = dir.path() / rec.name;
    EXPECT_EQ(mask_from_pgm(read_pgm(run_dir / "s0.gt.pgm")), gt);
    EXPECT_EQ(mask_from_pgm(read_pgm(run_dir / "s0.weak.pgm")), rec.overlays[0].weak);
    EXPECT_EQ(mask_from_pgm(read_pgm(run_dir / "s0.pred.pgm")), rec.overlays[0].pred);
    const Image back = image_from_pgm(read_pgm(run_dir / "s0.input.pgm"));
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_NEAR(back[i], input[i], 0.5 / 255.0);
    EXPECT_FALSE(std::filesystem::exists(dir.path() / stats.name));
}
