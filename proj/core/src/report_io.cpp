#include "edl/report_io.hpp"

#include <charconv>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json_fwd.hpp"

namespace edl {

using nlohmann::json;

std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string coverage_report_csv(const CoverageReport& r) {
  std::string out = "coverage,u_threshold,n_kept,auc,f1_pos,f1_neg,micro_f1\n";
  for (const auto& row : r.rows) {
    out += format_real(row.coverage) + ',' + format_real(row.u_threshold) + ',' + std::to_string(row.n_kept) + ',' +
           (row.auc ? format_real(*row.auc) : std::string()) + ',' + format_real(row.f1_pos) + ',' +
           format_real(row.f1_neg) + ',' + format_real(row.micro_f1) + '\n';
  }
  return out;
}

std::string coverage_report_json(const CoverageReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"coverage", row.coverage},
                    {"u_threshold", row.u_threshold},
                    {"n_kept", row.n_kept},
                    {"auc", row.auc ? json(*row.auc) : json(nullptr)},
                    {"f1_pos", row.f1_pos},
                    {"f1_neg", row.f1_neg},
                    {"micro_f1", row.micro_f1},
                    {"rejected_ids", row.rejected_ids}});
  }
  return json{{"threshold", r.threshold}, {"rows", std::move(rows)}}.dump(1) + "\n";
}

CoverageReport coverage_report_from_json(const std::string& text) {
  try {
    const auto doc = json::parse(text);
    CoverageReport r;
    r.threshold = doc.at("threshold").get<double>();
    for (const auto& j : doc.at("rows")) {
      CoverageRow row;
      row.coverage = j.at("coverage").get<double>();
      row.u_threshold = j.at("u_threshold").get<double>();
      row.n_kept = j.at("n_kept").get<std::size_t>();
      if (!j.at("auc").is_null()) row.auc = j.at("auc").get<double>();
      row.f1_pos = j.at("f1_pos").get<double>();
      row.f1_neg = j.at("f1_neg").get<double>();
      row.micro_f1 = j.at("micro_f1").get<double>();
      row.rejected_ids = j.at("rejected_ids").get<std::vector<std::uint64_t>>();
      r.rows.push_back(std::move(row));
    }
    return r;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("coverage report: ") + e.what());
  }
}

std::string baseline_comparison_csv(std::span<const BaselineRow> rows) {
  std::string out =
      "delta,realized_coverage,n_kept,baseline_f1_pos,baseline_f1_neg,baseline_micro_f1,"
      "evidential_f1_pos,evidential_f1_neg,evidential_micro_f1\n";
  for (const auto& r : rows) {
    out += format_real(r.delta) + ',' + format_real(r.realized_coverage) + ',' + std::to_string(r.n_kept) + ',' +
           format_real(r.f1_pos) + ',' + format_real(r.f1_neg) + ',' + format_real(r.micro_f1) + ',' +
           format_real(r.evidential_f1_pos) + ',' + format_real(r.evidential_f1_neg) + ',' +
           format_real(r.evidential_micro_f1) + '\n';
  }
  return out;
}

std::string bootstrap_plan_json(const BootstrapPlan& plan) {
  return json{{"epsilon", plan.epsilon},
              {"n_kept", plan.kept_ids.size()},
              {"n_dropped", plan.dropped_ids.size()},
              {"kept_ids", plan.kept_ids},
              {"dropped_ids", plan.dropped_ids},
              {"uncertainties", plan.uncertainties}}
             .dump(1) +
         "\n";
}

BootstrapPlan bootstrap_plan_from_json(const std::string& text) {
  try {
    const auto doc = json::parse(text);
    BootstrapPlan plan;
    plan.epsilon = doc.at("epsilon").get<double>();
    plan.kept_ids = doc.at("kept_ids").get<std::vector<std::uint64_t>>();
    plan.dropped_ids = doc.at("dropped_ids").get<std::vector<std::uint64_t>>();
    if (doc.contains("uncertainties")) plan.uncertainties = doc.at("uncertainties").get<std::vector<double>>();
    return plan;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bootstrap plan: ") + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace edl
