#include "wsseg/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

#include "wsseg/errors.hpp"

namespace wsseg {

namespace {

// Mixed into the run seed so the split and the batch order draw from different streams.
constexpr std::uint64_t kSplitStream = 0x5eed0001;
constexpr std::uint64_t kShuffleStream = 0x5eed0002;

LossTargets targets_for(const Sample& s, const Mask* weak, AblationMode mode) {
    LossTargets t;
    t.input = &s.image();
    t.stat = s.stat();
    t.weak = weak;
    // Only the fully supervised baseline ever sees the full ground truth.
    if (mode == AblationMode::fully_supervised) t.gt = &s.gt();
    return t;
}

struct LossAccumulator {
    double total = 0.0, confidence = 0.0, reconstruction = 0.0, stats = 0.0, weak = 0.0, full = 0.0;
    std::size_t n = 0;

    void add(const LossReport& r) {
        total += r.total;
        confidence += r.confidence.value_or(0.0);
        reconstruction += r.reconstruction.value_or(0.0);
        stats += r.stats.value_or(0.0);
        weak += r.weak.value_or(0.0);
        full += r.full.value_or(0.0);
        ++n;
    }

    LossReport mean(const LossWeights& w) const {
        LossReport r;
        if (n == 0) return r;
        const double k = static_cast<double>(n);
        r.total = total / k;
        if (w.confidence > 0.0) r.confidence = confidence / k;
        if (w.reconstruction > 0.0) r.reconstruction = reconstruction / k;
        if (w.stats > 0.0) r.stats = stats / k;
        if (w.weak > 0.0) r.weak = weak / k;
        if (w.full > 0.0) r.full = full / k;
        return r;
    }
};

std::string opt_field(const std::optional<double>& v) { return v ? fmt::format("{:.8f}", *v) : std::string(); }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

void optimizer_step(std::span<double> params, std::span<const double> grads, OptimizerState& state) {
    if (params.size() != grads.size()) {
        throw ShapeMismatch(fmt::format("optimizer: {} parameters but {} gradients", params.size(), grads.size()));
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) throw NonFiniteGradient(fmt::format("gradient coordinate {} is {}", i, grads[i]));
    }
    if (state.first_moment.empty() && state.second_moment.empty()) {
        state.first_moment.assign(params.size(), 0.0);
        state.second_moment.assign(params.size(), 0.0);
    }
    if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
        throw ShapeMismatch("optimizer moments do not match the parameter count");
    }

    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
        v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
        params[i] -= state.learning_rate * (m / c1) / (std::sqrt(v / c2) + state.eps);
    }
}

void optimizer_step(ModelParams& params, const ParamGrads& grads, OptimizerState& state) {
    optimizer_step(params.values(), grads.values(), state);
}

std::string_view to_string(AblationMode mode) {
    switch (mode) {
        case AblationMode::stats_only: return "stats_only";
        case AblationMode::weak_only: return "weak_only";
        case AblationMode::combined: return "combined";
        case AblationMode::fully_supervised: return "fully_supervised";
    }
    return "unknown";
}

AblationMode parse_mode(std::string_view name) {
    for (AblationMode m : {AblationMode::stats_only, AblationMode::weak_only, AblationMode::combined, AblationMode::fully_supervised}) {
        if (to_string(m) == name) return m;
    }
    throw InvalidConfig(fmt::format("unknown ablation mode '{}' (expected stats_only, weak_only, combined or fully_supervised)", name));
}

bool uses_weak_mask(AblationMode mode) { return mode == AblationMode::weak_only || mode == AblationMode::combined; }

LossWeights default_weights(AblationMode mode) {
    LossWeights w;  // confidence = reconstruction = 1
    w.stats = (mode == AblationMode::stats_only || mode == AblationMode::combined) ? 1.0 : 0.0;
    w.weak = uses_weak_mask(mode) ? 1.0 : 0.0;
    w.full = mode == AblationMode::fully_supervised ? 1.0 : 0.0;
    return w;
}

AblationConfig AblationConfig::for_mode(AblationMode mode, double weak_coverage, std::uint64_t seed) {
    AblationConfig c;
    c.mode = mode;
    c.weak_coverage = weak_coverage;
    c.weights = default_weights(mode);
    c.seed = seed;
    return c;
}

void AblationConfig::validate() const {
    weights.validate();
    const auto forbid = [&](double w, const char* term) {
        if (w != 0.0) throw InvalidConfig(fmt::format("mode {} requires the {} weight to be 0, got {}", to_string(mode), term, w));
    };
    switch (mode) {
        case AblationMode::stats_only: forbid(weights.weak, "weak"); forbid(weights.full, "full"); break;
        case AblationMode::weak_only: forbid(weights.stats, "stats"); forbid(weights.full, "full"); break;
        case AblationMode::combined: forbid(weights.full, "full"); break;
        case AblationMode::fully_supervised: forbid(weights.stats, "stats"); forbid(weights.weak, "weak"); break;
    }
    if (!(weak_coverage > 0.0 && weak_coverage <= 1.0)) throw InvalidConfig(fmt::format("weak_coverage must lie in (0,1], got {}", weak_coverage));
    if (epochs < 0) throw InvalidConfig(fmt::format("epochs must be >= 0, got {}", epochs));
    if (batch_size < 1) throw InvalidConfig(fmt::format("batch_size must be >= 1, got {}", batch_size));
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidConfig(fmt::format("learning_rate must be >= 0, got {}", learning_rate));
}

std::string AblationConfig::run_name() const {
    if (uses_weak_mask(mode)) return fmt::format("{}_c{:.2f}_s{}", to_string(mode), weak_coverage, seed);
    return fmt::format("{}_s{}", to_string(mode), seed);
}

std::vector<AblationConfig> default_grid(std::uint64_t seed) {
    return {
        AblationConfig::for_mode(AblationMode::stats_only, 0.08, seed),
        AblationConfig::for_mode(AblationMode::combined, 0.04, seed),
        AblationConfig::for_mode(AblationMode::combined, 0.08, seed),
        AblationConfig::for_mode(AblationMode::combined, 0.12, seed),
        AblationConfig::for_mode(AblationMode::weak_only, 0.08, seed),
        AblationConfig::for_mode(AblationMode::fully_supervised, 0.08, seed),
    };
}

DataSplit make_split(std::size_t n, std::uint64_t seed) {
    DataSplit split;
    if (n == 0) return split;
    if (n == 1) return DataSplit{{0}, {0}};
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed ^ kSplitStream);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_eval = std::max<std::size_t>(1, n / 5);
    split.eval.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_eval));
    split.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_eval), idx.end());
    std::sort(split.eval.begin(), split.eval.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

LossReport mean_loss(const ModelParams& params, std::span<const Sample* const> samples, std::span<const Mask* const> weak,
                     const AblationConfig& config) {
    LossAccumulator acc;
    ForwardTrace t;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = *samples[i];
        forward(params, s.image(), t);
        acc.add(total_loss(targets_for(s, weak[i], config.mode), t.pred, &t.recon, config.weights).report);
    }
    return acc.mean(config.weights);
}

RunRecord train_on_split(std::span<const Sample> dataset, const DataSplit& split, const AblationConfig& config,
                         const ModelConfig& model_config) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    model_config.validate();
    if (dataset.empty() || split.train.empty()) throw InvalidConfig("training needs a non-empty dataset");

    std::vector<const Sample*> train_set, eval_set;
    for (std::size_t i : split.train) train_set.push_back(&dataset[i]);
    for (std::size_t i : split.eval) eval_set.push_back(&dataset[i]);

    // Weak masks are fixed for the whole run.
    std::vector<Mask> weak_storage;
    std::vector<const Mask*> train_weak(train_set.size(), nullptr);
    if (uses_weak_mask(config.mode)) {
        weak_storage.reserve(train_set.size());
        for (const Sample* s : train_set) weak_storage.push_back(weak_mask(s->gt(), config.weak_coverage));
        for (std::size_t i = 0; i < train_set.size(); ++i) train_weak[i] = &weak_storage[i];
    }

    RunRecord rec;
    rec.name = config.run_name();
    rec.config = config;
    rec.model_config = model_config;
    rec.train_size = train_set.size();
    rec.eval_size = eval_set.size();

    ModelParams params = init_params(model_config);
    OptimizerState opt;
    opt.learning_rate = config.learning_rate;
    std::mt19937_64 rng(config.seed ^ kShuffleStream);

    rec.initial_train_loss = mean_loss(params, train_set, train_weak, config).total;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    ForwardTrace trace;
    ParamGrads g = ModelParams::zeros(model_config);
    std::vector<double> grad_sum(params.size(), 0.0);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        LossAccumulator acc;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t i = order[b];
                const Sample& s = *train_set[i];
                try {
                    forward(params, s.image(), trace);
                } catch (const NonFiniteOutput&) {
                    throw NonFiniteLoss(fmt::format("run {}: model output is not finite on sample '{}' in epoch {}", rec.name, s.name(), epoch + 1));
                }
                const TotalLoss loss = total_loss(targets_for(s, train_weak[i], config.mode), trace.pred, &trace.recon, config.weights);
                if (!std::isfinite(loss.report.total)) {
                    throw NonFiniteLoss(fmt::format("run {}: non-finite loss {} on sample '{}' in epoch {}", rec.name, loss.report.total,
                                                    s.name(), epoch + 1));
                }
                acc.add(loss.report);
                backward(params, trace, loss.d_pred, loss.d_recon, g);
                const auto gv = g.values();
                for (std::size_t k = 0; k < grad_sum.size(); ++k) grad_sum[k] += gv[k];
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (double& v : grad_sum) v *= inv;
            optimizer_step(params.values(), grad_sum, opt);
        }
        EpochRecord er;
        er.epoch = epoch + 1;
        er.mean_loss = acc.mean(config.weights);
        er.eval_iou = evaluate(params, eval_set).mean_iou;
        rec.epochs.push_back(std::move(er));
    }

    rec.final_train_loss = mean_loss(params, train_set, train_weak, config).total;
    rec.final_eval = evaluate(params, eval_set);

    const std::size_t n_overlay = std::min(kOverlaySamples, eval_set.size());
    for (std::size_t k = 0; k < n_overlay; ++k) {
        const Sample& s = *eval_set[k];
        const ForwardTrace t = forward(params, s.image());
        Mask weak = uses_weak_mask(config.mode) ? weak_mask(s.gt(), config.weak_coverage) : Mask(s.gt().shape());
        rec.overlays.push_back({s.name(), s.image(), s.gt(), std::move(weak), binarize(t.pred)});
    }

    rec.params = std::move(params);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rec;
}

RunRecord train(std::span<const Sample> dataset, const AblationConfig& config, const ModelConfig& model_config) {
    return train_on_split(dataset, make_split(dataset.size(), config.seed), config, model_config);
}

std::vector<RunRecord> run_ablation_grid(std::span<const Sample> dataset, const ModelConfig& model_config,
                                         std::span<const AblationConfig> grid, std::uint64_t split_seed, int jobs) {
    const DataSplit split = make_split(dataset.size(), split_seed);
    std::vector<RunRecord> records(grid.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            try {
                records[i] = train_on_split(dataset, split, grid[i], model_config);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    const std::size_t n_workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(grid.size(), 1));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

std::string epochs_csv(std::span<const RunRecord> records) {
    std::string out = "run,mode,coverage,seed,epoch,total,confidence,reconstruction,stats,weak,full,eval_iou\n";
    for (const RunRecord& r : records) {
        const std::string coverage = uses_weak_mask(r.config.mode) ? fmt::format("{}", r.config.weak_coverage) : "na";
        for (const EpochRecord& e : r.epochs) {
            const LossReport& l = e.mean_loss;
            out += fmt::format("{},{},{},{},{},{:.8f},{},{},{},{},{},{:.6f}\n", r.name, to_string(r.config.mode), coverage, r.config.seed,
                               e.epoch, l.total, opt_field(l.confidence), opt_field(l.reconstruction), opt_field(l.stats),
                               opt_field(l.weak), opt_field(l.full), e.eval_iou);
        }
    }
    return out;
}

std::string run_summary_json(const RunRecord& r) {
    nlohmann::json j;
    const AblationConfig& c = r.config;
    j["run"] = r.name;
    j["config"] = {
        {"mode", std::string(to_string(c.mode))},
        {"weak_coverage", c.weak_coverage},
        {"weights",
         {{"confidence", c.weights.confidence},
          {"reconstruction", c.weights.reconstruction},
          {"stats", c.weights.stats},
          {"weak", c.weights.weak},
          {"full", c.weights.full}}},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"learning_rate", c.learning_rate},
        {"seed", c.seed},
    };
    j["model"] = {{"height", r.model_config.input_size.height},
                  {"width", r.model_config.input_size.width},
                  {"base_channels", r.model_config.base_channels},
                  {"seed", r.model_config.seed}};
    j["train_size"] = r.train_size;
    j["eval_size"] = r.eval_size;
    j["initial_train_loss"] = r.initial_train_loss;
    j["final_train_loss"] = r.final_train_loss;
    j["final_iou"] = r.final_iou();
    j["degenerate"] = r.degenerate();
    j["degenerate_count"] = r.final_eval.degenerate_count;
    j["mean_pred"] = r.final_eval.pooled_mean;
    j["std_pred"] = r.final_eval.pooled_std;
    j["threshold"] = r.final_eval.threshold;
    j["per_sample_iou"] = r.final_eval.per_sample_iou;
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochRecord& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"total", e.mean_loss.total},
                          {"confidence", opt_json(e.mean_loss.confidence)},
                          {"reconstruction", opt_json(e.mean_loss.reconstruction)},
                          {"stats", opt_json(e.mean_loss.stats)},
                          {"weak", opt_json(e.mean_loss.weak)},
                          {"full", opt_json(e.mean_loss.full)},
                          {"eval_iou", e.eval_iou}});
    }
    j["epochs"] = std::move(epochs);
    j["wall_seconds"] = r.wall_seconds;
    return j.dump(2) + "\n";
}

}  // namespace wsseg
