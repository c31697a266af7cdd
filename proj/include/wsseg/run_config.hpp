#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsseg/data.hpp"
#include "wsseg/model.hpp"
#include "wsseg/training.hpp"

namespace wsseg {

/// Where samples come from: generated (`synth`) or read from a directory of PGM pairs (`dataset`).
struct DatasetSource {
    std::optional<SynthConfig> synth;
    std::optional<std::filesystem::path> dir;
    double weak_coverage = 0.08;  // used when loading `dir`
};

/// Parsed experiment file. Field names mirror the JSON keys; see README for the full schema.
struct RunConfig {
    DatasetSource data;
    ModelConfig model;
    bool model_size_given = false;  // otherwise taken from the data
    std::vector<AblationConfig> runs;  // one entry for "ablation", several for "grid"
    bool is_grid = false;
    std::uint64_t split_seed = 0;
    std::optional<std::filesystem::path> out;

    /// Replaces every seed in the file (data, model, runs, split).
    void override_seed(std::uint64_t seed);
};

/// Throws ConfigError on malformed JSON, unknown keys, wrong types, out-of-range values, or a
/// `dataset` directory that does not exist.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Generates or loads the samples described by the config.
std::vector<Sample> materialize_dataset(const DatasetSource& source);

}  // namespace wsseg
