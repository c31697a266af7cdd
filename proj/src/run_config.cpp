#include "wsseg/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <fmt/core.h>
#include <json.hpp>

#include "wsseg/errors.hpp"

namespace wsseg {

namespace {

using nlohmann::json;

void require_object(const json& j, std::string_view where) {
    if (!j.is_object()) throw InvalidConfig(fmt::format("'{}' must be a JSON object", where));
}

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (std::string_view a : allowed) ok = ok || key == a;
        if (!ok) throw InvalidConfig(fmt::format("unknown key '{}' in {}", key, where));
    }
}

template <typename T>
void read(const json& j, std::string_view where, const char* key, T& target) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        target = it->get<T>();
    } catch (const json::exception&) {
        throw InvalidConfig(fmt::format("'{}.{}' has the wrong type", where, key));
    }
}

// Seeds are u64; accept only non-negative integers.
void read_seed(const json& j, std::string_view where, std::uint64_t& target) {
    const auto it = j.find("seed");
    if (it == j.end()) return;
    if (!it->is_number_unsigned()) throw InvalidConfig(fmt::format("'{}.seed' must be a non-negative integer", where));
    target = it->get<std::uint64_t>();
}

SynthConfig parse_synth(const json& j) {
    require_object(j, "synth");
    reject_unknown(j, "synth",
                   {"height", "width", "n_samples", "roi_fraction_range", "contrast", "noise_std", "background_level", "weak_coverage", "seed"});
    SynthConfig c;
    read(j, "synth", "height", c.shape.height);
    read(j, "synth", "width", c.shape.width);
    read(j, "synth", "n_samples", c.n_samples);
    if (j.contains("roi_fraction_range")) {
        const json& r = j["roi_fraction_range"];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
            throw InvalidConfig("'synth.roi_fraction_range' must be a [lo, hi] pair of numbers");
        }
        c.roi_fraction_lo = r[0].get<double>();
        c.roi_fraction_hi = r[1].get<double>();
    }
    read(j, "synth", "contrast", c.contrast);
    read(j, "synth", "noise_std", c.noise_std);
    read(j, "synth", "background_level", c.background_level);
    read(j, "synth", "weak_coverage", c.weak_coverage);
    read_seed(j, "synth", c.seed);
    c.validate();
    return c;
}

LossWeights parse_weights(const json& j, std::string_view where, LossWeights w) {
    require_object(j, where);
    reject_unknown(j, where, {"confidence", "reconstruction", "stats", "weak", "full"});
    read(j, where, "confidence", w.confidence);
    read(j, where, "reconstruction", w.reconstruction);
    read(j, where, "stats", w.stats);
    read(j, where, "weak", w.weak);
    read(j, where, "full", w.full);
    return w;
}

AblationConfig parse_ablation(const json& j, std::string_view where) {
    require_object(j, where);
    reject_unknown(j, where, {"mode", "weak_coverage", "weights", "epochs", "batch_size", "learning_rate", "seed"});
    if (!j.contains("mode") || !j["mode"].is_string()) throw InvalidConfig(fmt::format("'{}.mode' is required and must be a string", where));
    AblationConfig c = AblationConfig::for_mode(parse_mode(j["mode"].get<std::string>()));
    read(j, where, "weak_coverage", c.weak_coverage);
    if (j.contains("weights")) c.weights = parse_weights(j["weights"], fmt::format("{}.weights", where), c.weights);
    read(j, where, "epochs", c.epochs);
    read(j, where, "batch_size", c.batch_size);
    read(j, where, "learning_rate", c.learning_rate);
    read_seed(j, where, c.seed);
    c.validate();
    return c;
}

}  // namespace

void RunConfig::override_seed(std::uint64_t seed) {
    if (data.synth) data.synth->seed = seed;
    model.seed = seed;
    for (AblationConfig& r : runs) r.seed = seed;
    split_seed = seed;
}

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidConfig(fmt::format("config is not valid JSON: {}", e.what()));
    }
    require_object(root, "config");
    reject_unknown(root, "config", {"synth", "dataset", "model", "ablation", "grid", "split_seed", "out"});

    RunConfig cfg;
    if (root.contains("synth") == root.contains("dataset")) throw InvalidConfig("config needs exactly one of 'synth' or 'dataset'");
    if (root.contains("synth")) {
        cfg.data.synth = parse_synth(root["synth"]);
    } else {
        const json& d = root["dataset"];
        require_object(d, "dataset");
        reject_unknown(d, "dataset", {"path", "weak_coverage"});
        if (!d.contains("path") || !d["path"].is_string()) throw InvalidConfig("'dataset.path' is required and must be a string");
        cfg.data.dir = std::filesystem::path(d["path"].get<std::string>());
        read(d, "dataset", "weak_coverage", cfg.data.weak_coverage);
        if (!(cfg.data.weak_coverage > 0.0 && cfg.data.weak_coverage <= 1.0)) throw InvalidConfig("'dataset.weak_coverage' must lie in (0,1]");
        if (!std::filesystem::is_directory(*cfg.data.dir)) {
            throw InvalidConfig(fmt::format("dataset directory '{}' does not exist", cfg.data.dir->string()));
        }
    }

    if (root.contains("model")) {
        const json& m = root["model"];
        require_object(m, "model");
        reject_unknown(m, "model", {"height", "width", "base_channels", "seed"});
        cfg.model_size_given = m.contains("height") || m.contains("width");
        read(m, "model", "height", cfg.model.input_size.height);
        read(m, "model", "width", cfg.model.input_size.width);
        read(m, "model", "base_channels", cfg.model.base_channels);
        read_seed(m, "model", cfg.model.seed);
    }
    if (cfg.model_size_given) {
        cfg.model.validate();
    } else if (cfg.data.synth) {
        cfg.model.input_size = cfg.data.synth->shape;  // checked when a model is built
        cfg.model_size_given = true;
    }

    if (root.contains("ablation") && root.contains("grid")) throw InvalidConfig("config may hold 'ablation' or 'grid', not both");
    if (root.contains("ablation")) {
        cfg.runs.push_back(parse_ablation(root["ablation"], "ablation"));
    } else if (root.contains("grid")) {
        cfg.is_grid = true;
        const json& g = root["grid"];
        if (g.is_string() && g.get<std::string>() == "default") {
            cfg.runs = default_grid(cfg.model.seed);
        } else if (g.is_array() && !g.empty()) {
            for (std::size_t i = 0; i < g.size(); ++i) cfg.runs.push_back(parse_ablation(g[i], fmt::format("grid[{}]", i)));
        } else {
            throw InvalidConfig("'grid' must be \"default\" or a non-empty array of run objects");
        }
    }

    if (root.contains("split_seed")) {
        if (!root["split_seed"].is_number_unsigned()) throw InvalidConfig("'split_seed' must be a non-negative integer");
        cfg.split_seed = root["split_seed"].get<std::uint64_t>();
    } else {
        cfg.split_seed = cfg.model.seed;
    }
    if (root.contains("out")) {
        if (!root["out"].is_string()) throw InvalidConfig("'out' must be a string");
        cfg.out = std::filesystem::path(root["out"].get<std::string>());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig(fmt::format("cannot read config file '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::vector<Sample> materialize_dataset(const DatasetSource& source) {
    if (source.synth) return generate_synthetic(*source.synth);
    return load_dataset(*source.dir, source.weak_coverage);
}

}  // namespace wsseg
