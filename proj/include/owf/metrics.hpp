#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "owf/trace.hpp"

namespace owf {

/// Confusion tallies. A positive classification of the correct sensitive page
/// is a true positive; of a different sensitive page, a wrong positive; of a
/// non-sensitive trace, a false positive. FN/TN are derived.
struct ConfusionCounts {
  int64_t n_p = 0;   // sensitive test elements
  int64_t n_n = 0;   // non-sensitive test elements
  int64_t n_tp = 0;
  int64_t n_wp = 0;
  int64_t n_fp = 0;

  int64_t n_fn() const { return n_p - n_tp - n_wp; }
  int64_t n_tn() const { return n_n - n_fp; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
};

struct Rates {
  double r_tp = 0.0;
  double r_wp = 0.0;
  double r_fp = 0.0;
  double n_p = 0.0;  // denominators actually used
  double n_n = 0.0;

  double recall() const { return r_tp; }
};

ConfusionCounts tally(const std::vector<std::pair<Label, Label>>& truth_predicted);
Rates rates(const ConfusionCounts& counts);

/// pi_r = R_TP / (R_TP + R_WP + r * R_FP). Undefined (nullopt) when all three
/// rates are zero.
std::optional<double> r_precision(double r_tp, double r_wp, double r_fp, double r);

/// Wald 95%-style half width z*sqrt(x(1-x)/n).
double wald_halfwidth(double x_hat, double n, double z = 1.96);

/// Wilson score upper bound for a binomial rate.
double wilson_upper(double x_hat, double n, double z = 1.96);

enum class IntervalMethod { WALD, WILSON };

struct PrecisionEstimate {
  double r = 0.0;
  std::optional<double> point;
  std::optional<double> lower;
  std::optional<double> upper;
  IntervalMethod method = IntervalMethod::WALD;
  bool defined = true;  // false when there were no positives at all

  /// Sort key for "best cell" selection; undefined estimates sort below all.
  double lower_or(double fallback) const { return lower.value_or(fallback); }
};

/// Full interval logic: Wald naive pi bounds when N_FP >= 10, Wilson lower
/// bound for the FPR (and pi) when N_FP < 10. Rate intervals are clamped to
/// [0, 1] before use; zero denominators yield absent values.
PrecisionEstimate precision_estimate(const ConfusionCounts& counts, double r, double z = 1.96);

/// Same computation driven by rates + explicit denominators (the N_FP < 10
/// rule uses r_fp * n_n).
PrecisionEstimate precision_estimate_rates(const Rates& rates, double r, double z = 1.96);

/// Lower-bound curve: for each TPR grid point, the estimate with WPR=FPR=0.
std::vector<std::pair<double, double>> bound_curve(const std::vector<double>& r_tp_grid,
                                                   double n_p, double n_n, double r,
                                                   double z = 1.96);

}  // namespace owf
