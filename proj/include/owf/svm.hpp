#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace owf {

/// Read-only view of a kernel (Gram) matrix over one training set, or over a
/// subset of a larger Gram (the one-against-one pair machines index into the
/// global matrix without copying).
class KernelView {
 public:
  KernelView(const float* data, size_t n) : data_(data), stride_(n), n_(n) {}
  KernelView(const float* data, size_t stride, std::span<const int32_t> indices)
      : data_(data), stride_(stride), n_(indices.size()), indices_(indices) {}

  float at(size_t i, size_t j) const {
    if (indices_.empty()) return data_[i * stride_ + j];
    return data_[static_cast<size_t>(indices_[i]) * stride_ +
                 static_cast<size_t>(indices_[j])];
  }
  size_t size() const { return n_; }

 private:
  const float* data_;
  size_t stride_;
  size_t n_;
  std::span<const int32_t> indices_;
};

/// One soft-margin binary machine trained on the dual problem. Decision
/// f(x) = sum_i coef_i * K(x_i, x) + bias; positive means the +1 class.
struct BinarySvm {
  std::vector<int32_t> sv_indices;  // into the training set the Gram covered
  std::vector<double> sv_coef;      // alpha_i * y_i
  double bias = 0.0;
  bool converged = true;
  bool zero_margin = false;  // no support vectors survived; decision is bias only

  double decide(const std::vector<double>& kernel_row) const {
    double s = bias;
    for (size_t k = 0; k < sv_indices.size(); ++k)
      s += sv_coef[k] * kernel_row[static_cast<size_t>(sv_indices[k])];
    return s;
  }
};

struct SvmConfig {
  double cost = 87.0;
  double tolerance = 1e-3;
  int64_t max_iterations = 0;  // 0 = 200 * n, floored at 100000
};

/// SMO over a precomputed kernel. labels[i] in {+1, -1}. Indefinite kernels
/// (the edit-distance one) are handled by flooring the pivot curvature.
BinarySvm train_binary_svm(const KernelView& kernel, const std::vector<int8_t>& labels,
                           const SvmConfig& config);

}  // namespace owf
