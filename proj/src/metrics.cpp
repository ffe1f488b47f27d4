#include "owf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "owf/common.hpp"

namespace owf {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  n_p += o.n_p;
  n_n += o.n_n;
  n_tp += o.n_tp;
  n_wp += o.n_wp;
  n_fp += o.n_fp;
  return *this;
}

ConfusionCounts tally(const std::vector<std::pair<Label, Label>>& truth_predicted) {
  ConfusionCounts c;
  for (const auto& [truth, predicted] : truth_predicted) {
    if (truth.is_monitored()) {
      ++c.n_p;
      if (predicted.is_monitored()) {
        if (predicted == truth)
          ++c.n_tp;
        else
          ++c.n_wp;
      }
    } else {
      ++c.n_n;
      if (predicted.is_monitored()) ++c.n_fp;
    }
  }
  return c;
}

Rates rates(const ConfusionCounts& c) {
  Rates r;
  r.n_p = static_cast<double>(c.n_p);
  r.n_n = static_cast<double>(c.n_n);
  r.r_tp = c.n_p ? static_cast<double>(c.n_tp) / r.n_p : 0.0;
  r.r_wp = c.n_p ? static_cast<double>(c.n_wp) / r.n_p : 0.0;
  r.r_fp = c.n_n ? static_cast<double>(c.n_fp) / r.n_n : 0.0;
  return r;
}

std::optional<double> r_precision(double r_tp, double r_wp, double r_fp, double r) {
  double denom = r_tp + r_wp + r * r_fp;
  if (denom <= 0.0) return std::nullopt;
  return r_tp / denom;
}

double wald_halfwidth(double x_hat, double n, double z) {
  if (n <= 0.0) throw Error("wald_halfwidth: n must be > 0");
  return z * std::sqrt(x_hat * (1.0 - x_hat) / n);
}

double wilson_upper(double x_hat, double n, double z) {
  if (n <= 0.0) throw Error("wilson_upper: n must be > 0");
  double z2n = z * z / n;
  double num = x_hat + z2n / 2.0 +
               z * std::sqrt(x_hat * (1.0 - x_hat) / n + z * z / (4.0 * n * n));
  return num / (1.0 + z2n);
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

PrecisionEstimate estimate_impl(double r_tp, double r_wp, double r_fp, double n_p, double n_n,
                                double n_fp_count, double r, double z) {
  PrecisionEstimate est;
  est.r = r;
  auto point = r_precision(r_tp, r_wp, r_fp, r);
  if (!point.has_value()) {
    // No positives of any kind: the metric conditions on an empty event.
    est.defined = false;
    est.method = n_fp_count < 10.0 ? IntervalMethod::WILSON : IntervalMethod::WALD;
    return est;
  }
  if (n_p <= 0.0 || n_n <= 0.0) {
    est.point = clamp01(*point);
    est.defined = true;
    return est;  // no interval computable without both denominators
  }

  double c_tp = wald_halfwidth(r_tp, n_p, z);
  double c_wp = wald_halfwidth(r_wp, n_p, z);
  double c_fp = wald_halfwidth(r_fp, n_n, z);
  double tp_min = clamp01(r_tp - c_tp), tp_max = clamp01(r_tp + c_tp);
  double wp_min = clamp01(r_wp - c_wp), wp_max = clamp01(r_wp + c_wp);
  double fp_min = clamp01(r_fp - c_fp);

  if (n_fp_count < 10.0) {
    est.method = IntervalMethod::WILSON;
    double fp_max = wilson_upper(r_fp, n_n, z);
    double denom = tp_max + wp_max + r * fp_max;
    if (denom > 0.0) est.lower = clamp01(tp_min / denom);
    // point/upper deliberately absent: unstable in this regime
  } else {
    est.method = IntervalMethod::WALD;
    est.point = clamp01(*point);
    double denom = tp_min + wp_min + r * fp_min;
    if (denom > 0.0) {
      double pi_max = tp_max / denom;
      double c_pi = pi_max - *point;
      est.upper = clamp01(pi_max);
      est.lower = clamp01(*point - c_pi);
    }
  }
  return est;
}

}  // namespace

PrecisionEstimate precision_estimate(const ConfusionCounts& counts, double r, double z) {
  Rates rt = rates(counts);
  return estimate_impl(rt.r_tp, rt.r_wp, rt.r_fp, rt.n_p, rt.n_n,
                       static_cast<double>(counts.n_fp), r, z);
}

PrecisionEstimate precision_estimate_rates(const Rates& rt, double r, double z) {
  return estimate_impl(rt.r_tp, rt.r_wp, rt.r_fp, rt.n_p, rt.n_n, rt.r_fp * rt.n_n, r, z);
}

std::vector<std::pair<double, double>> bound_curve(const std::vector<double>& r_tp_grid,
                                                   double n_p, double n_n, double r, double z) {
  std::vector<std::pair<double, double>> out;
  out.reserve(r_tp_grid.size());
  for (double r_tp : r_tp_grid) {
    Rates rt;
    rt.r_tp = r_tp;
    rt.r_wp = 0.0;
    rt.r_fp = 0.0;
    rt.n_p = n_p;
    rt.n_n = n_n;
    PrecisionEstimate est = precision_estimate_rates(rt, r, z);
    out.emplace_back(r_tp, est.lower.value_or(0.0));
  }
  return out;
}

}  // namespace owf
