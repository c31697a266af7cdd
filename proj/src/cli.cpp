#include "wsseg/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "wsseg/data.hpp"
#include "wsseg/errors.hpp"
#include "wsseg/evaluation.hpp"
#include "wsseg/morphology.hpp"
#include "wsseg/pgm.hpp"
#include "wsseg/report.hpp"
#include "wsseg/run_config.hpp"
#include "wsseg/training.hpp"

namespace wsseg {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string path_a;
    std::string path_b;
    double coverage = 0.0;
};

RunConfig load_with_overrides(const Options& o) {
    RunConfig cfg = load_run_config(o.config);
    if (o.seed) cfg.override_seed(*o.seed);
    if (!o.out.empty()) cfg.out = fs::path(o.out);
    if (!cfg.out) throw InvalidConfig("no output directory: set 'out' in the config or pass --out");
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(fmt::format("cannot write '{}'", path.string()));
    f << text;
    if (!f) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError(fmt::format("cannot create directory '{}'", dir.string()));
}

std::vector<Sample> dataset_for(RunConfig& cfg) {
    std::vector<Sample> data = materialize_dataset(cfg.data);
    if (data.empty()) throw EmptyStack("dataset has no samples");
    if (!cfg.model_size_given) cfg.model.input_size = data.front().image().shape();
    cfg.model.validate();
    return data;
}

void write_runs(const std::vector<RunRecord>& records, const fs::path& out_dir) {
    make_dir(out_dir);
    emit_report(records, out_dir);
    write_text(out_dir / "epochs.csv", epochs_csv(records));
    for (const RunRecord& r : records) {
        write_text(out_dir / (r.name + ".json"), run_summary_json(r));
        save_checkpoint(r.params, (out_dir / (r.name + ".ckpt")).string());
    }
}

int cmd_synth(const Options& o, std::ostream& out) {
    RunConfig cfg = load_with_overrides(o);
    if (!cfg.data.synth) throw InvalidConfig("synth needs a 'synth' section in the config");
    const std::vector<Sample> samples = generate_synthetic(*cfg.data.synth);
    make_dir(*cfg.out);
    double fraction = 0.0;
    for (const Sample& s : samples) {
        save_sample(*cfg.out, s);
        fraction += s.stat();
    }
    out << fmt::format("wrote {} samples to {} (mean ROI fraction {:.4f})\n", samples.size(), cfg.out->string(),
                       fraction / static_cast<double>(samples.size()));
    return kExitOk;
}

int cmd_weakmask(const Options& o, std::ostream& out) {
    const fs::path in(o.path_a);
    const Mask gt = mask_from_pgm(read_pgm(in));
    const Mask weak = weak_mask(gt, o.coverage);

    std::string stem = in.filename().string();
    for (const char* suffix : {".mask.pgm", ".pgm"}) {
        const std::string s(suffix);
        if (stem.size() > s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0) {
            stem.resize(stem.size() - s.size());
            break;
        }
    }
    const fs::path dir = o.out.empty() ? in.parent_path() : fs::path(o.out);
    if (!dir.empty()) make_dir(dir);
    const fs::path target = dir / (stem + ".weak.pgm");
    write_pgm(target, to_pgm(weak));

    const std::size_t w = foreground_count(weak);
    const std::size_t g = foreground_count(gt);
    out << fmt::format("wrote {}: achieved coverage {}/{} ({:.4f})\n", target.string(), w, g,
                       static_cast<double>(w) / static_cast<double>(g));
    return kExitOk;
}

int cmd_slice_select(const Options& o, std::ostream& out) {
    out << select_largest_roi_slice(load_mask_stack(o.path_a)) << '\n';
    return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    RunConfig cfg = load_with_overrides(o);
    if (cfg.is_grid) throw InvalidConfig("train runs a single 'ablation' entry; use ablate for a grid");
    if (cfg.runs.empty()) throw InvalidConfig("train needs an 'ablation' section in the config");
    const std::vector<Sample> data = dataset_for(cfg);
    const DataSplit split = make_split(data.size(), cfg.split_seed);
    std::vector<RunRecord> records;
    records.push_back(train_on_split(data, split, cfg.runs.front(), cfg.model));
    write_runs(records, *cfg.out);
    out << results_table(records);
    return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
    RunConfig cfg = load_with_overrides(o);
    if (o.jobs < 1) throw InvalidConfig(fmt::format("--jobs must be >= 1, got {}", o.jobs));
    if (cfg.runs.empty()) cfg.runs = default_grid(cfg.model.seed);
    const std::vector<Sample> data = dataset_for(cfg);
    const std::vector<RunRecord> records = run_ablation_grid(data, cfg.model, cfg.runs, cfg.split_seed, o.jobs);
    write_runs(records, *cfg.out);
    out << results_table(records);
    return kExitOk;
}

int cmd_score(const Options& o, std::ostream& out) {
    const Mask pred = mask_from_pgm(read_pgm(o.path_a));
    const Mask gt = mask_from_pgm(read_pgm(o.path_b));
    out << fmt::format("{:.4f}\n", iou(pred, gt));
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Weakly supervised segmentation experiments"};
    app.require_subcommand(1);
    Options o;

    auto add_run_flags = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (overrides the config)");
        sub->add_option("--seed", o.seed, "replaces every seed in the config");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset as PGM pairs");
    add_run_flags(synth);

    CLI::App* weak = app.add_subcommand("weakmask", "erode a mask to a weak mask of the given coverage");
    weak->add_option("mask", o.path_a, "binary mask PGM")->required();
    weak->add_option("coverage", o.coverage, "target fraction of foreground to keep, in (0,1]")->required();
    weak->add_option("--out", o.out, "output directory (default: next to the input)");

    CLI::App* slice = app.add_subcommand("slice-select", "print the index of the slice with the largest ROI");
    slice->add_option("volume_dir", o.path_a, "directory of <stem>.slice<k>.mask.pgm files")->required();

    CLI::App* train_cmd = app.add_subcommand("train", "train one configuration");
    add_run_flags(train_cmd);

    CLI::App* ablate = app.add_subcommand("ablate", "run the ablation grid");
    add_run_flags(ablate);
    ablate->add_option("--jobs", o.jobs, "runs trained concurrently");

    CLI::App* score = app.add_subcommand("score", "IoU between two binary mask PGMs");
    score->add_option("pred", o.path_a, "predicted mask PGM")->required();
    score->add_option("gt", o.path_b, "ground-truth mask PGM")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*synth) return cmd_synth(o, out);
        if (*weak) return cmd_weakmask(o, out);
        if (*slice) return cmd_slice_select(o, out);
        if (*train_cmd) return cmd_train(o, out);
        if (*ablate) return cmd_ablate(o, out);
        if (*score) return cmd_score(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace wsseg
