#pragma once

#include <string>
#include <vector>

#include "owf/harness.hpp"

namespace owf {

/// Parsed back from a sweep CSV; one record per (row, r).
struct ResultRecord {
  std::string classifier;
  std::string po;
  std::string params;
  double r = 0.0;
  ConfusionCounts counts;
  double r_tp = 0.0, r_wp = 0.0, r_fp = 0.0;
  std::optional<double> pi_point, pi_lower, pi_upper;
  std::string method;
  bool recall_ok = false;
};

std::vector<ResultRecord> read_results_csv(const std::string& path);

enum class ReportTable {
  BASELINE,       // best baseline cell per classifier
  CONFIDENCE,     // best confidence-PO cell per classifier
  DISTANCE,       // best too-far / too-close cells per classifier
  ENSEMBLE,       // every unanimous-subset row
  DEFENSE,        // baseline + confidence cells (defended runs)
};

struct ReportSpec {
  ReportTable table = ReportTable::BASELINE;
  std::vector<std::string> input_files;
  std::string output_path;
  std::vector<double> r_values = {10.0, 1000.0};
  double recall_floor = 0.2;
};

/// Render the best-admissible-cell table as CSV. Missing cells render as
/// "no admissible point". Throws when the inputs carry no usable rows.
void render(const ReportSpec& spec);

/// Two-column plot data (x, pi lower bound or point) plus a gnuplot script
/// next to it. `x_param` names the sweep parameter to use as x (e.g. "M").
void render_curve(const std::vector<ResultRecord>& records, const std::string& classifier,
                  const std::string& po, const std::string& x_param, double r,
                  const std::string& output_path);

}  // namespace owf
