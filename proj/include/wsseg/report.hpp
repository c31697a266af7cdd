#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "wsseg/training.hpp"

namespace wsseg {

/// mode,coverage,final_iou,degenerate,mean_pred,std_pred,epochs,seed
/// Coverage is "na" for modes without a weak mask; degenerate is 0/1.
std::string results_csv(std::span<const RunRecord> records);

/// Fixed-width table of the same rows, for the terminal.
std::string results_table(std::span<const RunRecord> records);

/// Writes <out>/results.csv and, per run, <out>/<run>/<sample>.{input,gt,weak,pred}.pgm for the
/// run's overlay panels. Throws IoError when the directory cannot be written.
void emit_report(std::span<const RunRecord> records, const std::filesystem::path& out_dir);

}  // namespace wsseg
