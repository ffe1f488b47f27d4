#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "owf/classifiers.hpp"
#include "owf/dataset.hpp"
#include "owf/distances.hpp"
#include "owf/metrics.hpp"
#include "owf/optimizers.hpp"
#include "owf/synth.hpp"

namespace owf {

/// Flat key-value experiment description; see parse_config. Grids accept
/// explicit lists ("1,2,3") or ranges ("start:stop:step").
struct ExperimentConfig {
  std::string dataset_source;  // "synth:AxB+C" or "dir:<path>"
  std::optional<DatasetSpec> subset_spec;
  int folds = 10;
  uint64_t seed = 0;
  int threads = 1;
  std::string simd = "auto";
  std::vector<ClassifierKind> classifiers;
  bool baseline_class = true;          // train the open-world class
  int64_t background_train_size = -1;  // -1 = all unmonitored training traces
  double recall_floor = 0.2;
  std::vector<double> r_values = {10.0, 1000.0};
  int64_t train_cap = 10000;  // SVM kinds + the forest; 0 disables
  ClassifierConfig classifier;

  std::vector<int> po_confidence_k;
  std::vector<double> po_confidence_m;
  std::vector<double> po_toofar_m;
  std::vector<int> po_tooclose_m;
  std::vector<DistanceKindId> po_distance_kinds;
  int po_dist_variant = 1;
  std::vector<double> po_ensemble_m;
  std::vector<double> po_ensemble_weights;
  std::vector<double> po_ensemble_wm;
  bool ensemble_subsets = false;

  std::string out_path;       // sweep CSV; empty = don't write
  std::string decision_log;   // optional per-decision CSV

  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// Grid helper: "0.5:2.0:0.25" or "0.5,1,2".
std::vector<double> parse_grid(const std::string& text);

struct SweepRow {
  std::string classifier;
  std::string po;      // "baseline", "confidence", "toofar", ...
  std::string params;  // "-" for baseline
  ConfusionCounts counts;

  Rates rates_of() const { return rates(counts); }
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<double> r_values;
  double recall_floor = 0.2;

  /// Best admissible row (recall >= floor, defined lower bound) for one
  /// (classifier, po family, r); nullptr when no point qualifies.
  const SweepRow* best(const std::string& classifier, const std::string& po, double r) const;

  std::string to_csv() const;
};

/// Load "synth:AxB+C" or "dir:path", then apply the optional subset spec.
Dataset load_experiment_dataset(const ExperimentConfig& cfg);

/// Full protocol: fold, train, score once, evaluate every PO grid point from
/// the caches, aggregate counts across folds. Writes the sweep CSV when
/// out_path is set (append-only, schema header written once).
SweepResult run_experiment(const ExperimentConfig& cfg);

struct CurvePoint {
  double x = 0.0;
  PrecisionEstimate estimate;
  bool degenerate = false;  // closed-world point (no background class)
};

/// Baseline 10-precision against background-class training size, fixed test
/// fold. One curve per configured classifier.
std::map<std::string, std::vector<CurvePoint>> openworld_size_curve(
    const ExperimentConfig& cfg, const std::vector<int64_t>& n_grid);

// --- scenario simulations ----------------------------------------------------

/// Pre-scored test pool: scenarios sample indices, never re-run classifiers.
/// The callables let tests swap in stub classifiers.
struct ScenarioPool {
  std::map<int, std::vector<size_t>> page_elements;  // page -> element ids
  std::vector<size_t> unmonitored_elements;
  std::function<double(size_t element, int target_page)> match_for;
  std::function<bool(size_t element, int target_page)> positive_for;
};

struct ScenarioPo {
  bool enabled = false;
  int k = 1;
  double m_match = 0.9;
};

ScenarioPool make_scenario_pool(const TrainedModel& model, const Dataset& test_pool,
                                const ScenarioPo& po, int threads);

/// One sensitive access among S candidates; returns the mean success rate.
/// use_po: pick the candidate with the highest match for the target page.
/// Otherwise classify all candidates and pick uniformly among positives for
/// the target (0 when there are none).
double selection_scenario(const ScenarioPool& pool, bool use_po, int s_candidates, int trials,
                          uint64_t seed);

struct IdentifyResult {
  double detection_rate = 0.0;
  double false_identification_rate = 0.0;
};

/// Sensitive clients visit the target page at rate b within n_obs accesses;
/// non-sensitive clients never do. A client is flagged when its positive
/// count exceeds m_identify.
IdentifyResult identify_client(const ScenarioPool& pool, double b, int n_obs, int m_identify,
                               int trials, uint64_t seed);

/// Smallest m_identify whose false-identification rate is <= target.
int calibrate_m_identify(const ScenarioPool& pool, int n_obs, double target_rate, int trials,
                         uint64_t seed);

}  // namespace owf
