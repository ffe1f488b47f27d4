#pragma once

#include <map>
#include <vector>

#include "owf/classifiers.hpp"
#include "owf/distances.hpp"
#include "owf/trace.hpp"

namespace owf {

/// Match scores mapped linearly so the best class is 1 and the worst is 0.
/// When every raw score is equal nothing can be ordered; scores go all-zero
/// and `degenerate` is set.
struct ScaledMatchVector {
  std::vector<double> scores;   // roster-aligned, in [0, 1]
  std::vector<size_t> order;    // roster indices, best match first
  bool degenerate = false;
};

ScaledMatchVector scale_matches(const MatchVector& raw);

/// Accept keeps the classifier's assumed class; Reject classifies the element
/// as non-monitored. A PO never substitutes a different monitored label.
struct PoDecision {
  bool accepted = false;
  Label label = Label::non_monitored();  // assumed class when accepted

  static PoDecision accept(Label assumed) { return PoDecision{true, assumed}; }
  static PoDecision reject() { return PoDecision{false, Label::non_monitored()}; }
};

/// Reject when the top K competitors of the assumed class average a scaled
/// match above m_match. m_match = 1 disables the PO (nothing can exceed it),
/// including for degenerate vectors, so a sweep's 1.0 row equals baseline.
PoDecision confidence_po(const ScaledMatchVector& scaled, const std::vector<Label>& roster,
                         int k, double m_match);

/// Mean pairwise training distance per monitored class. Classes with a single
/// instance get 0 and are flagged.
struct InClassDistanceTable {
  std::map<int, double> expected;      // page id -> mean pairwise distance
  std::map<int, bool> single_instance; // flagged: no spread measurable
};

InClassDistanceTable build_inclass_table(const Dataset& train_set, const DistanceKind& kind,
                                         int threads = 1);

/// Reject when the element sits more than m times the expected in-class
/// distance from its assumed class. expected == 0 accepts only exact matches.
PoDecision too_far_po(double distance_to_assumed, double expected, double m, Label assumed);

/// Reject when at least m other classes are strictly closer than the assumed
/// one. `distances` maps page id -> class distance and must contain the
/// assumed page.
PoDecision too_close_po(const std::map<int, double>& distances, Label assumed, int m);

/// Accept only a unanimous monitored vote.
PoDecision ensemble_unanimous(const std::vector<Label>& labels);

/// Plurality vote over per-classifier argmax labels; ties break toward the
/// candidate backed by the best-ranked classifier in `precision_rank` (rank 0
/// = most precise). Rejects when the summed scaled match for the winner is
/// below m_ensemble, or when the winner is the non-monitored class.
PoDecision ensemble_threshold(const std::vector<ScaledMatchVector>& scaled,
                              const std::vector<Label>& roster,
                              const std::vector<int>& precision_rank, double m_ensemble);

/// Weighted variant: same vote, weighted score sum against m.
PoDecision ensemble_weighted(const std::vector<ScaledMatchVector>& scaled,
                             const std::vector<Label>& roster,
                             const std::vector<int>& precision_rank,
                             const std::vector<double>& weights, double m);

}  // namespace owf
