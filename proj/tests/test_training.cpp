#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "support.hpp"
#include "wsseg/errors.hpp"
#include "wsseg/training.hpp"

using namespace wsseg;

namespace {

std::vector<Sample> tiny_dataset(std::uint64_t seed, int n = 10) {
    SynthConfig c;
    c.shape = {16, 16};
    c.n_samples = n;
    c.seed = seed;
    return generate_synthetic(c);
}

ModelConfig tiny_model(std::uint64_t seed) { return ModelConfig{{16, 16}, 2, seed}; }

AblationConfig quick(AblationMode mode, int epochs = 2) {
    AblationConfig c = AblationConfig::for_mode(mode, 0.08, 1);
    c.epochs = epochs;
    c.batch_size = 4;
    return c;
}

}  // namespace

TEST(OptimizerStep, ZeroGradientAtStepOne) {
    std::vector<double> p{1.0, -2.0};
    OptimizerState s;
    optimizer_step(p, std::vector<double>{0.0, 0.0}, s);
    EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
    EXPECT_EQ(s.step_count, 1u);
    EXPECT_EQ(s.first_moment, (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(s.second_moment, (std::vector<double>{0.0, 0.0}));
}

TEST(OptimizerStep, FirstStepIsLearningRate) {
    std::vector<double> p{0.5};
    OptimizerState s;
    s.learning_rate = 0.01;
    optimizer_step(p, std::vector<double>{1.0}, s);
    EXPECT_NEAR(p[0], 0.5 - 0.01 / (1.0 + 1e-8), 1e-15);
}

TEST(OptimizerStep, MatchesHandComputedSecondStep) {
    std::vector<double> p{0.0};
    OptimizerState s;
    optimizer_step(p, std::vector<double>{2.0}, s);
    optimizer_step(p, std::vector<double>{-1.0}, s);
    const double m = 0.9 * (0.1 * 2.0) + 0.1 * -1.0;
    const double v = 0.999 * (0.001 * 4.0) + 0.001 * 1.0;
    const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
    const double first = -1e-3 * 2.0 / (2.0 + 1e-8);  // m-hat 2, v-hat 4
    EXPECT_NEAR(p[0], first - 1e-3 * mh / (std::sqrt(vh) + 1e-8), 1e-15);
    EXPECT_EQ(s.step_count, 2u);
}

TEST(OptimizerStep, DeterministicAndRejectsNonFinite) {
    std::vector<double> a{1.0, 2.0}, b{1.0, 2.0};
    OptimizerState sa, sb;
    optimizer_step(a, std::vector<double>{0.3, -0.7}, sa);
    optimizer_step(b, std::vector<double>{0.3, -0.7}, sb);
    EXPECT_EQ(a, b);
    EXPECT_EQ(sa, sb);

    const std::vector<double> before = a;
    const OptimizerState state_before = sa;
    EXPECT_THROW(optimizer_step(a, std::vector<double>{0.1, std::numeric_limits<double>::infinity()}, sa), NonFiniteGradient);
    EXPECT_EQ(a, before);
    EXPECT_EQ(sa, state_before);
    EXPECT_THROW(optimizer_step(a, std::vector<double>{0.1}, sa), ShapeMismatch);
}

TEST(AblationMode, NamesRoundTrip) {
    for (AblationMode m : {AblationMode::stats_only, AblationMode::weak_only, AblationMode::combined, AblationMode::fully_supervised})
        EXPECT_EQ(parse_mode(to_string(m)), m);
    EXPECT_THROW(parse_mode("both"), InvalidConfig);
    EXPECT_TRUE(uses_weak_mask(AblationMode::combined));
    EXPECT_FALSE(uses_weak_mask(AblationMode::fully_supervised));
}

TEST(AblationConfig, ModeWeights) {
    const LossWeights s = default_weights(AblationMode::stats_only);
    EXPECT_EQ(s, (LossWeights{1, 1, 1, 0, 0}));
    EXPECT_EQ(default_weights(AblationMode::weak_only), (LossWeights{1, 1, 0, 1, 0}));
    EXPECT_EQ(default_weights(AblationMode::combined), (LossWeights{1, 1, 1, 1, 0}));
    EXPECT_EQ(default_weights(AblationMode::fully_supervised), (LossWeights{1, 1, 0, 0, 1}));

    AblationConfig c = AblationConfig::for_mode(AblationMode::stats_only);
    c.weights.weak = 0.5;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = AblationConfig::for_mode(AblationMode::fully_supervised);
    c.weights.stats = 1.0;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = AblationConfig::for_mode(AblationMode::combined);
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = AblationConfig::for_mode(AblationMode::combined, 0.0);
    EXPECT_THROW(c.validate(), InvalidConfig);
}

TEST(AblationConfig, RunNames) {
    EXPECT_EQ(AblationConfig::for_mode(AblationMode::combined, 0.08, 1).run_name(), "combined_c0.08_s1");
    EXPECT_EQ(AblationConfig::for_mode(AblationMode::stats_only, 0.08, 1).run_name(), "stats_only_s1");
}

TEST(DefaultGrid, CoversTheAblationColumns) {
    const auto g = default_grid(4);
    ASSERT_EQ(g.size(), 6u);
    std::set<std::string> names;
    for (const auto& c : g) {
        names.insert(c.run_name());
        EXPECT_EQ(c.seed, 4u);
        EXPECT_NO_THROW(c.validate());
    }
    EXPECT_EQ(names, (std::set<std::string>{"stats_only_s4", "combined_c0.04_s4", "combined_c0.08_s4", "combined_c0.12_s4",
                                            "weak_only_c0.08_s4", "fully_supervised_s4"}));
}

TEST(MakeSplit, PartitionsDeterministically) {
    for (std::size_t n : {2u, 5u, 10u, 200u}) {
        const DataSplit s = make_split(n, 3);
        EXPECT_EQ(s.eval.size(), std::max<std::size_t>(1, n / 5));
        EXPECT_EQ(s.train.size() + s.eval.size(), n);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.eval.begin(), s.eval.end());
        EXPECT_EQ(all.size(), n);
        EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
        EXPECT_EQ(make_split(n, 3).train, s.train);
    }
    EXPECT_NE(make_split(200, 1).eval, make_split(200, 2).eval);
    const DataSplit one = make_split(1, 0);
    EXPECT_EQ(one.train, std::vector<std::size_t>{0});
    EXPECT_EQ(one.eval, std::vector<std::size_t>{0});
}

TEST(Train, ZeroEpochsScoresTheUntrainedModel) {
    const auto data = tiny_dataset(1);
    const RunRecord r = train(data, quick(AblationMode::combined, 0), tiny_model(1));
    EXPECT_TRUE(r.epochs.empty());
    EXPECT_EQ(r.params, init_params(tiny_model(1)));
    const DataSplit split = make_split(data.size(), 1);
    std::vector<const Sample*> eval;
    for (std::size_t i : split.eval) eval.push_back(&data[i]);
    EXPECT_EQ(r.final_iou(), evaluate(init_params(tiny_model(1)), eval).mean_iou);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
    const auto data = tiny_dataset(2);
    AblationConfig c = quick(AblationMode::combined, 2);
    c.learning_rate = 0.0;
    const RunRecord r = train(data, c, tiny_model(2));
    EXPECT_EQ(r.params, init_params(tiny_model(2)));
    EXPECT_EQ(r.epochs.size(), 2u);
}

TEST(Train, DivergenceIsANumericError) {
    const auto data = tiny_dataset(6);
    AblationConfig c = quick(AblationMode::combined, 6);
    c.learning_rate = 1e300;
    EXPECT_THROW(train(data, c, tiny_model(6)), NumericError);
}

TEST(Train, RecordsEveryEpochAndIsDeterministic) {
    const auto data = tiny_dataset(3);
    const AblationConfig c = quick(AblationMode::fully_supervised, 3);
    const RunRecord a = train(data, c, tiny_model(3));
    const RunRecord b = train(data, c, tiny_model(3));
    ASSERT_EQ(a.epochs.size(), 3u);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(epochs_csv(std::span(&a, 1)), epochs_csv(std::span(&b, 1)));
    EXPECT_EQ(a.train_size, 8u);
    EXPECT_EQ(a.eval_size, 2u);
    for (const EpochRecord& e : a.epochs) {
        EXPECT_GE(e.eval_iou, 0.0);
        EXPECT_LE(e.eval_iou, 1.0);
        EXPECT_TRUE(e.mean_loss.full.has_value());
        EXPECT_FALSE(e.mean_loss.stats.has_value());
    }
    EXPECT_LT(a.final_train_loss, a.initial_train_loss);
}

TEST(Train, RejectsInvalidInputs) {
    const auto data = tiny_dataset(4);
    EXPECT_THROW(train({}, quick(AblationMode::combined), tiny_model(0)), InvalidConfig);
    EXPECT_THROW(train(data, quick(AblationMode::combined), ModelConfig{{8, 8}, 2, 0}), ShapeMismatch);
}

TEST(AblationGrid, ParallelMatchesSerial) {
    const auto data = tiny_dataset(5, 8);
    std::vector<AblationConfig> grid{quick(AblationMode::stats_only, 1), quick(AblationMode::weak_only, 1), quick(AblationMode::combined, 1)};
    const auto serial = run_ablation_grid(data, tiny_model(5), grid, 5, 1);
    const auto parallel = run_ablation_grid(data, tiny_model(5), grid, 5, 3);
    ASSERT_EQ(serial.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(serial[i].config, grid[i]);
        EXPECT_EQ(serial[i].params, parallel[i].params);
    }
    EXPECT_EQ(epochs_csv(serial), epochs_csv(parallel));
}

TEST(EpochsCsv, Layout) {
    const auto data = tiny_dataset(6, 6);
    std::vector<AblationConfig> grid{quick(AblationMode::stats_only, 2), quick(AblationMode::combined, 1)};
    const auto recs = run_ablation_grid(data, tiny_model(6), grid, 6, 1);
    const std::string csv = epochs_csv(recs);
    std::vector<std::string> lines;
    std::stringstream ss(csv);
    for (std::string l; std::getline(ss, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "run,mode,coverage,seed,epoch,total,confidence,reconstruction,stats,weak,full,eval_iou");
    EXPECT_EQ(lines[1].rfind("stats_only_s1,stats_only,na,1,1,", 0), 0u);
    EXPECT_EQ(lines[3].rfind("combined_c0.08_s1,combined,0.08,1,1,", 0), 0u);
    // Inactive terms are empty fields: stats_only has no weak or full value.
    EXPECT_NE(lines[1].find(",,,"), std::string::npos);
}

TEST(RunSummaryJson, EchoesConfigAndScores) {
    const auto data = tiny_dataset(7, 6);
    const RunRecord r = train(data, quick(AblationMode::combined, 1), tiny_model(7));
    const auto j = nlohmann::json::parse(run_summary_json(r));
    EXPECT_EQ(j.at("run"), r.name);
    EXPECT_EQ(j.at("config").at("mode"), "combined");
    EXPECT_DOUBLE_EQ(j.at("final_iou").get<double>(), r.final_iou());
    EXPECT_EQ(j.at("per_sample_iou").size(), r.eval_size);
}
