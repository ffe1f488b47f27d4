#include "owf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "owf/common.hpp"

namespace owf {

// Maximal-violating-pair SMO on:
//   min 1/2 a^T Q a - e^T a,  0 <= a <= C,  y^T a = 0,  Q_ij = y_i y_j K_ij.
BinarySvm train_binary_svm(const KernelView& kernel, const std::vector<int8_t>& labels,
                           const SvmConfig& config) {
  const size_t n = kernel.size();
  if (labels.size() != n) throw Error("svm: label/kernel size mismatch");
  bool has_pos = false, has_neg = false;
  for (int8_t y : labels) (y > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw Error("svm: need both classes present");

  const double C = config.cost;
  const double tol = config.tolerance;
  int64_t max_iter = config.max_iterations;
  if (max_iter <= 0) max_iter = std::max<int64_t>(100000, 200 * static_cast<int64_t>(n));

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of the dual objective
  auto y = [&](size_t i) { return static_cast<double>(labels[i]); };

  bool converged = false;
  for (int64_t iter = 0; iter < max_iter; ++iter) {
    // i: argmax -y_t grad_t over t with room to grow in the +y direction.
    // j: argmin over t with room to shrink.
    double up_best = -std::numeric_limits<double>::infinity();
    double low_best = std::numeric_limits<double>::infinity();
    size_t i = n, j = n;
    for (size_t t = 0; t < n; ++t) {
      double v = -y(t) * grad[t];
      bool in_up = (labels[t] > 0 && alpha[t] < C) || (labels[t] < 0 && alpha[t] > 0);
      bool in_low = (labels[t] > 0 && alpha[t] > 0) || (labels[t] < 0 && alpha[t] < C);
      if (in_up && v > up_best) {
        up_best = v;
        i = t;
      }
      if (in_low && v < low_best) {
        low_best = v;
        j = t;
      }
    }
    if (i >= n || j >= n || up_best - low_best < tol) {
      converged = true;
      break;
    }

    double kii = kernel.at(i, i), kjj = kernel.at(j, j), kij = kernel.at(i, j);
    double eta = kii + kjj - 2.0 * kij;  // curvature along the pair direction
    if (eta <= 1e-12) eta = 1e-12;       // indefinite kernel: floor the pivot

    // Solve the two-variable subproblem keeping y^T a fixed.
    double yi = y(i), yj = y(j);
    double delta = (up_best - low_best) / eta;
    double ai_old = alpha[i], aj_old = alpha[j];
    double ai = ai_old + yi * delta;
    double aj = aj_old - yj * delta;

    // Clip to the box; the equality constraint couples the two moves.
    double sum_i = yi * ai_old + yj * aj_old;
    ai = std::clamp(ai, 0.0, C);
    aj = yj * (sum_i - yi * ai);
    if (aj < 0.0) {
      aj = 0.0;
      ai = yi * (sum_i - yj * aj);
      ai = std::clamp(ai, 0.0, C);
    } else if (aj > C) {
      aj = C;
      ai = yi * (sum_i - yj * aj);
      ai = std::clamp(ai, 0.0, C);
    }

    double di = ai - ai_old, dj = aj - aj_old;
    if (std::fabs(di) < 1e-14 && std::fabs(dj) < 1e-14) {
      converged = true;  // numerically stuck at the optimum
      break;
    }
    alpha[i] = ai;
    alpha[j] = aj;
    for (size_t t = 0; t < n; ++t)
      grad[t] += y(t) * (yi * di * kernel.at(i, t) + yj * dj * kernel.at(j, t));
  }

  // Bias from the KKT conditions: midpoint of the violating-pair bounds.
  double up_best = -std::numeric_limits<double>::infinity();
  double low_best = std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  size_t free_count = 0;
  for (size_t t = 0; t < n; ++t) {
    double v = -y(t) * grad[t];
    bool in_up = (labels[t] > 0 && alpha[t] < C) || (labels[t] < 0 && alpha[t] > 0);
    bool in_low = (labels[t] > 0 && alpha[t] > 0) || (labels[t] < 0 && alpha[t] < C);
    if (in_up) up_best = std::max(up_best, v);
    if (in_low) low_best = std::min(low_best, v);
    if (alpha[t] > 0.0 && alpha[t] < C) {
      free_sum += v;
      ++free_count;
    }
  }
  BinarySvm out;
  out.converged = converged;
  if (free_count > 0)
    out.bias = free_sum / static_cast<double>(free_count);
  else if (std::isfinite(up_best) && std::isfinite(low_best))
    out.bias = (up_best + low_best) / 2.0;
  else
    out.bias = 0.0;

  for (size_t t = 0; t < n; ++t) {
    if (alpha[t] > 1e-12) {
      out.sv_indices.push_back(static_cast<int32_t>(t));
      out.sv_coef.push_back(alpha[t] * y(t));
    }
  }

  // Zero-margin detection: f(x_i) = y_i (G_i + 1) + b. A machine whose
  // decision value never moves across its own training set separates nothing
  // (identical classes collapse to a constant bias vote).
  double f_min = std::numeric_limits<double>::infinity();
  double f_max = -f_min;
  for (size_t t = 0; t < n; ++t) {
    double f = y(t) * (grad[t] + 1.0) + out.bias;
    f_min = std::min(f_min, f);
    f_max = std::max(f_max, f);
  }
  out.zero_margin = out.sv_indices.empty() || f_max - f_min < 1e-9;
  return out;
}

}  // namespace owf
