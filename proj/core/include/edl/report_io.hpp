#pragma once

// CSV and JSON renderings of evaluation artifacts. Floats are written in
// shortest round-trip form so files are lossless and byte-stable across reruns.

#include <filesystem>
#include <span>
#include <string>

#include "edl/selection.hpp"

namespace edl {

/// coverage,u_threshold,n_kept,auc,f1_pos,f1_neg,micro_f1 (auc empty when undefined).
std::string coverage_report_csv(const CoverageReport& r);
/// Same rows plus rejected_ids per coverage level.
std::string coverage_report_json(const CoverageReport& r);
CoverageReport coverage_report_from_json(const std::string& text);

std::string baseline_comparison_csv(std::span<const BaselineRow> rows);

std::string bootstrap_plan_json(const BootstrapPlan& plan);
BootstrapPlan bootstrap_plan_from_json(const std::string& text);

/// Shortest representation that reads back to the same double.
std::string format_real(double v);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace edl
