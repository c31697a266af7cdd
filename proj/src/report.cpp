#include "wsseg/report.hpp"

#include <fstream>
#include <system_error>

#include <fmt/core.h>

#include "wsseg/errors.hpp"
#include "wsseg/pgm.hpp"

namespace wsseg {

namespace {

std::string coverage_field(const AblationConfig& c) {
    return uses_weak_mask(c.mode) ? fmt::format("{}", c.weak_coverage) : "na";
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError(fmt::format("cannot create directory '{}'", dir.string()));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace

std::string results_csv(std::span<const RunRecord> records) {
    std::string out = "mode,coverage,final_iou,degenerate,mean_pred,std_pred,epochs,seed\n";
    for (const RunRecord& r : records) {
        out += fmt::format("{},{},{:.6f},{},{:.6f},{:.6f},{},{}\n", to_string(r.config.mode), coverage_field(r.config), r.final_iou(),
                           r.degenerate() ? 1 : 0, r.final_eval.pooled_mean, r.final_eval.pooled_std, r.config.epochs, r.config.seed);
    }
    return out;
}

std::string results_table(std::span<const RunRecord> records) {
    std::string out = fmt::format("{:<18} {:>8} {:>9} {:>10} {:>9} {:>8}\n", "mode", "coverage", "final_iou", "degenerate", "mean_pred",
                                  "std_pred");
    for (const RunRecord& r : records) {
        out += fmt::format("{:<18} {:>8} {:>9.4f} {:>10} {:>9.4f} {:>8.4f}\n", to_string(r.config.mode), coverage_field(r.config),
                           r.final_iou(), fmt::format("{}/{}", r.final_eval.degenerate_count, r.final_eval.per_sample_iou.size()),
                           r.final_eval.pooled_mean, r.final_eval.pooled_std);
    }
    return out;
}

void emit_report(std::span<const RunRecord> records, const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    write_text(out_dir / "results.csv", results_csv(records));
    for (const RunRecord& r : records) {
        if (r.overlays.empty()) continue;
        const std::filesystem::path dir = out_dir / r.name;
        ensure_dir(dir);
        for (const OverlayPanel& p : r.overlays) {
            write_pgm(dir / (p.sample + ".input.pgm"), to_pgm(p.input));
            write_pgm(dir / (p.sample + ".gt.pgm"), to_pgm(p.gt));
            write_pgm(dir / (p.sample + ".weak.pgm"), to_pgm(p.weak));
            write_pgm(dir / (p.sample + ".pred.pgm"), to_pgm(p.pred));
        }
    }
}

}  // namespace wsseg
