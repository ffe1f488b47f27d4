#pragma once

#include <string>
#include <vector>

#include "owf/trace.hpp"

namespace owf {

/// Interpacket times (t_1 = 0) and signed unit lengths, the two lists the
/// cross-correlation attack works on.
struct XCorrRepr {
  std::vector<double> times;
  std::vector<double> lengths;
};

enum class FeatureCatalog {
  PA_SVM,   // full base catalog
  WA_KNN,   // full base catalog (weights live in the classifier)
  HA_KFP,   // full base catalog
  PA_CUMUL  // 4 scalars + 100 interpolated cumulative samples
};

const char* catalog_name(FeatureCatalog c);
size_t catalog_length(FeatureCatalog c);

struct FeatureVector {
  std::vector<double> values;
  FeatureCatalog catalog_id = FeatureCatalog::PA_SVM;

  size_t size() const { return values.size(); }
  const double* data() const { return values.data(); }
};

/// Direction symbols: 'O' outgoing, 'I' incoming.
using DirectionString = std::string;

XCorrRepr repr_xcorr(const PacketSequence& seq);

/// 104 values: n_out, n_in, total_time, n, then 100 linear interpolations of
/// the cumulative signed direction sum at positions m*n/100, m = 1..100.
FeatureVector repr_cumul(const PacketSequence& seq);

DirectionString repr_direction_string(const PacketSequence& seq);

// Base catalog layout (227 values):
//   [0]       total cell count
//   [1]       outgoing count
//   [2]       incoming count
//   [3]       total transmission time
//   [4..23]   1-based indices of the first 20 outgoing cells, 0-padded
//   [24..123] incoming counts in the first 100 non-overlapping 30-cell
//             windows, 0-padded
//   [124]     burst count (maximal same-direction runs)
//   [125]     mean outgoing burst length
//   [126]     max outgoing burst length
//   [127..226] cumulative signed sum at cells 50, 100, ..., 5000, 0-padded
FeatureVector repr_catalog(const PacketSequence& seq, FeatureCatalog catalog);

/// One row per trace: origin, catalog_id, then the values.
std::string features_to_csv(const std::vector<PacketSequence>& traces, FeatureCatalog catalog);

}  // namespace owf
