#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "owf/dataset.hpp"
#include "owf/distances.hpp"
#include "owf/features.hpp"
#include "owf/forest.hpp"
#include "owf/svm.hpp"
#include "owf/trace.hpp"

namespace owf {

enum class ClassifierKind { BI_XCOR, PA_SVM, CA_OSAD, WA_KNN, HA_KFP, PA_CUMUL };

const char* classifier_kind_name(ClassifierKind k);
ClassifierKind parse_classifier_kind(const std::string& name);

struct ClassifierConfig {
  double svm_cost = 87.0;
  double svm_tolerance = 1e-3;
  double pasvm_gamma = 0x1p-25;
  double pacumul_gamma = 0x1p-28;
  bool cumul_minmax = false;  // optional per-dimension min-max scaling before the RBF
  int forest_trees = 1000;
  int knn_rounds = 3;
  int knn_neighbors = 5;
  double knn_delta = 0.01;
  size_t osad_max_len = 5000;
  int threads = 1;
  uint64_t seed = 0;

  uint64_t digest() const;
};

/// Raw per-class match scores, aligned with the model roster.
struct MatchVector {
  std::vector<double> scores;
};

/// Indices into the roster from highest match to lowest. Ties go to the
/// lower roster position, i.e. ascending page id with non-monitored last.
std::vector<size_t> ranked_order(const MatchVector& mv);

/// argmax with the same deterministic tie rule.
size_t argmax_index(const MatchVector& mv);

namespace engine {

struct Xcor {
  std::vector<XCorrRepr> templates;  // one per roster class
};

struct Svm {
  FeatureCatalog catalog = FeatureCatalog::PA_SVM;  // RBF kinds
  double gamma = 0.0;
  size_t osad_max_len = 5000;
  bool minmax_scaled = false;
  std::vector<double> scale_lo, scale_span;
  std::vector<FeatureVector> features;    // RBF kinds: one per training sample
  std::vector<DirectionString> dirstrs;   // CA_OSAD
  std::vector<int32_t> sample_class;      // roster index per training sample
  std::vector<BinarySvm> machines;        // unordered pairs (a<b), a-major order
  int flagged_machines = 0;               // non-converged or zero-margin, kept
};

struct Knn {
  std::vector<FeatureVector> features;
  std::vector<int32_t> sample_class;
  std::vector<double> weights;
};

struct Kfp {
  RandomForest forest;
};

}  // namespace engine

/// Immutable after training; safe to share across evaluation threads.
class TrainedModel {
 public:
  ClassifierKind kind() const { return kind_; }
  const std::vector<Label>& roster() const { return roster_; }
  uint64_t config_digest() const { return config_digest_; }
  /// SVM kinds: machines that failed to converge or kept no support vectors
  /// (degenerate class pairs). Flagged, never fatal.
  int flagged_machine_count() const { return svm_.flagged_machines; }

  MatchVector match(const PacketSequence& seq) const;
  Label classify_baseline(const PacketSequence& seq) const;

  void save(const std::string& path) const;
  static TrainedModel load(const std::string& path);

  friend TrainedModel train(ClassifierKind, const Dataset&, const ClassifierConfig&);

 private:
  ClassifierKind kind_ = ClassifierKind::BI_XCOR;
  std::vector<Label> roster_;  // monitored pages ascending, NonMonitored last if present
  uint64_t config_digest_ = 0;
  engine::Xcor xcor_;
  engine::Svm svm_;
  engine::Knn knn_;
  engine::Kfp kfp_;
};

/// Train one classifier. The roster is the dataset's monitored pages plus a
/// non-monitored class when the dataset carries unmonitored traces.
TrainedModel train(ClassifierKind kind, const Dataset& train_set, const ClassifierConfig& config);

/// Feature-weight learning for the nearest-neighbor attack: per point, the k
/// nearest same-class and other-class neighbors vote each feature up or down;
/// features whose other-class spread does not exceed the same-class spread
/// are damped by (1 - delta). Weights renormalize to sum |F| after each pass.
std::vector<double> learn_weights(const std::vector<FeatureVector>& features,
                                  const std::vector<int32_t>& sample_class, int rounds,
                                  int k_neighbors, double delta, uint64_t seed);

/// Dataset-level convenience wrapper over the same procedure.
std::vector<double> learn_weights(const Dataset& train_set, int rounds, int k_neighbors,
                                  double delta, uint64_t seed);

}  // namespace owf
