#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsseg/data.hpp"
#include "wsseg/evaluation.hpp"
#include "wsseg/losses.hpp"
#include "wsseg/model.hpp"

namespace wsseg {

/// Adam state. Moments are sized on the first step.
struct OptimizerState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step_count = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;

    bool operator==(const OptimizerState&) const = default;
};

/// One bias-corrected Adam update in place. Throws NonFiniteGradient (leaving params and state
/// untouched) and ShapeMismatch when sizes disagree.
void optimizer_step(std::span<double> params, std::span<const double> grads, OptimizerState& state);
void optimizer_step(ModelParams& params, const ParamGrads& grads, OptimizerState& state);

enum class AblationMode { stats_only, weak_only, combined, fully_supervised };

std::string_view to_string(AblationMode mode);
/// Throws InvalidConfig for unknown names.
AblationMode parse_mode(std::string_view name);
bool uses_weak_mask(AblationMode mode);

struct AblationConfig {
    AblationMode mode = AblationMode::combined;
    double weak_coverage = 0.08;
    LossWeights weights;
    int epochs = 30;
    int batch_size = 8;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    /// Default weights for the mode: confidence and reconstruction always 1; the supervision terms
    /// the mode allows are 1, the rest 0.
    static AblationConfig for_mode(AblationMode mode, double weak_coverage = 0.08, std::uint64_t seed = 0);

    /// Throws InvalidConfig when a weight the mode disables is nonzero, or fields are out of range.
    void validate() const;
    /// e.g. "combined_c0.08_s1", "stats_only_s1".
    std::string run_name() const;
    bool operator==(const AblationConfig&) const = default;
};

LossWeights default_weights(AblationMode mode);

/// Stats-only, combined at 4/8/12% coverage, weak-only at 8%, fully supervised.
std::vector<AblationConfig> default_grid(std::uint64_t seed);

struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> eval;
};

/// Seeded 80/20 shuffle split. n = 1 puts the single sample in both halves.
DataSplit make_split(std::size_t n, std::uint64_t seed);

struct EpochRecord {
    int epoch = 0;         // 1-based
    LossReport mean_loss;  // mean over the epoch's training samples, at pre-update parameters
    double eval_iou = 0.0;
};

struct OverlayPanel {
    std::string sample;
    Image input;
    Mask gt;
    Mask weak;
    Mask pred;
};

struct RunRecord {
    std::string name;
    AblationConfig config;
    ModelConfig model_config;
    std::size_t train_size = 0;
    std::size_t eval_size = 0;
    std::vector<EpochRecord> epochs;
    double initial_train_loss = 0.0;  // mean total loss on the training split before the first update
    double final_train_loss = 0.0;    // same, after the last update
    EvalReport final_eval;
    double wall_seconds = 0.0;
    std::vector<OverlayPanel> overlays;
    ModelParams params;

    double final_iou() const { return final_eval.mean_iou; }
    bool degenerate() const { return final_eval.degenerate; }
};

inline constexpr std::size_t kOverlaySamples = 4;

/// Mean LossReport of the active terms over the given samples, without updating anything.
LossReport mean_loss(const ModelParams& params, std::span<const Sample* const> samples, std::span<const Mask* const> weak,
                     const AblationConfig& config);

/// Mini-batch Adam training on `split.train`, scored on `split.eval` after every epoch.
/// Weak masks are re-derived once at config.weak_coverage for modes that use them.
/// Throws NonFiniteLoss with the sample and epoch when the loss diverges.
RunRecord train_on_split(std::span<const Sample> dataset, const DataSplit& split, const AblationConfig& config,
                         const ModelConfig& model_config);

/// train_on_split with make_split(dataset.size(), config.seed).
RunRecord train(std::span<const Sample> dataset, const AblationConfig& config, const ModelConfig& model_config);

/// Runs every config on one shared split, `jobs` runs at a time. Records keep grid order.
std::vector<RunRecord> run_ablation_grid(std::span<const Sample> dataset, const ModelConfig& model_config,
                                         std::span<const AblationConfig> grid, std::uint64_t split_seed, int jobs = 1);

/// One row per epoch per run:
/// run,mode,coverage,seed,epoch,total,confidence,reconstruction,stats,weak,full,eval_iou
std::string epochs_csv(std::span<const RunRecord> records);
/// Config echo, final scores, per-sample IoUs and timing.
std::string run_summary_json(const RunRecord& record);

}  // namespace wsseg
