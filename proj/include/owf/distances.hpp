#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "owf/features.hpp"
#include "owf/trace.hpp"

namespace owf {

enum class DistanceKindId { XCORR, PA_SVM_RBF, OSAD, WKNN_L1, CUMUL_RBF };

const char* distance_kind_name(DistanceKindId id);
DistanceKindId parse_distance_kind(const std::string& name);

/// A pairwise distance family plus its parameters. The RBF gamma
/// defaults match the original attacks' kernel widths.
struct DistanceKind {
  DistanceKindId id = DistanceKindId::XCORR;
  double gamma = 0.0;              // RBF kinds; must be > 0 there
  std::vector<double> weights;     // WKNN_L1; all >= 0, not all 0
  size_t osad_max_len = 5000;      // OSAD trace cap before the quadratic DP

  static DistanceKind xcorr();
  static DistanceKind pa_svm_rbf(double gamma = 0x1p-25);
  static DistanceKind osad(size_t max_len = 5000);
  static DistanceKind wknn_l1(std::vector<double> weights);
  static DistanceKind cumul_rbf(double gamma = 0x1p-28);

  void validate() const;
  uint64_t params_digest() const;
};

/// The six sequence-to-class aggregates.
enum class ClassDistanceVariant {
  MEAN_ALL = 1,      // mean over all of C
  TOP5_OVER_C = 2,   // sum of 5 smallest, divided by |C|
  TOP25_OVER_C = 3,  // sum of 25 smallest, divided by |C|
  NEAREST = 4,
  FIFTH_NEAREST = 5,
  TWENTYFIFTH_NEAREST = 6,
};

/// X(a,b): covariance-style sum over the common prefix, normalized by the
/// full-list population moments. Degenerate (sigma_a*sigma_b == 0) inputs
/// yield 0 by convention; *degenerate reports it when non-null.
double cross_correlation(std::span<const double> a, std::span<const double> b,
                         bool* degenerate = nullptr);

/// 2 - X(times) - X(lengths), in [0, 4].
double dist_xcorr(const XCorrRepr& a, const XCorrRepr& b);

/// 1 - exp(-gamma * ||a - b||^2). Lengths must match.
double dist_rbf(const FeatureVector& a, const FeatureVector& b, double gamma);
double dist_rbf(std::span<const double> a, std::span<const double> b, double gamma);

/// Optimal string alignment distance: unit-cost insert/delete/substitute plus
/// adjacent transposition, no substring edited twice.
int64_t osa(const DirectionString& a, const DirectionString& b);

/// 1 - exp(-2 * OSA^2 / min(|a|, |b|)) on direction strings.
double dist_osad(const DirectionString& a, const DirectionString& b);

double dist_weighted_l1(const FeatureVector& a, const FeatureVector& b,
                        std::span<const double> weights);

/// Precomputed representations for one distance kind over a set of traces,
/// so pairwise evaluation is a kernel call, not a re-featurization.
class DistanceEvaluator {
 public:
  DistanceEvaluator(DistanceKind kind, const std::vector<const PacketSequence*>& traces);

  double between(size_t i, size_t j) const;

  /// Distance from an external trace (prepared once) to set member j.
  struct Prepared {
    XCorrRepr xcorr;
    FeatureVector features;
    DirectionString dirstr;
  };
  Prepared prepare(const PacketSequence& seq) const;
  double to_member(const Prepared& p, size_t j) const;

  const DistanceKind& kind() const { return kind_; }
  size_t size() const { return n_; }

 private:
  DistanceKind kind_;
  size_t n_;
  std::vector<XCorrRepr> xcorr_;
  std::vector<FeatureVector> features_;
  std::vector<DirectionString> dirstr_;
};

/// Aggregate a sorted-or-not list of element distances into a class distance.
/// Throws when |C| is too small for the variant (needs 5 for variants 2/5,
/// 25 for 3/6).
double aggregate_class_distance(std::vector<double> dists, ClassDistanceVariant variant);

double dist_to_class(const PacketSequence& seq, const std::vector<const PacketSequence*>& cls,
                     const DistanceKind& kind, ClassDistanceVariant variant);

// Flat binary distance-matrix container: header (magic, kind, params digest,
// rows, cols) + row-major float32 body. Amortizes the quadratic cost across
// sweeps.
struct DistanceMatrix {
  DistanceKindId kind = DistanceKindId::XCORR;
  uint64_t params_digest = 0;
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<float> values;  // rows * cols

  float at(size_t r, size_t c) const { return values[r * cols + c]; }
};

void save_distance_matrix(const DistanceMatrix& m, const std::string& path);
DistanceMatrix load_distance_matrix(const std::string& path);

}  // namespace owf
