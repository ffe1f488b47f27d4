#include "owf/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "owf/parallel.hpp"

namespace owf {

ScaledMatchVector scale_matches(const MatchVector& raw) {
  if (raw.scores.size() < 2) throw Error("scale_matches needs >= 2 classes");
  ScaledMatchVector out;
  out.order = ranked_order(raw);
  double hi = raw.scores[out.order.front()];
  double lo = raw.scores[out.order.back()];
  out.scores.resize(raw.scores.size());
  if (hi == lo) {
    out.degenerate = true;
    std::fill(out.scores.begin(), out.scores.end(), 0.0);
    return out;
  }
  double inv = 1.0 / (hi - lo);
  for (size_t i = 0; i < raw.scores.size(); ++i) out.scores[i] = (raw.scores[i] - lo) * inv;
  return out;
}

PoDecision confidence_po(const ScaledMatchVector& scaled, const std::vector<Label>& roster,
                         int k, double m_match) {
  if (k < 1) throw Error("confidence_po: K must be >= 1");
  if (static_cast<size_t>(k) + 1 > roster.size())
    throw Error("confidence_po: K too large for roster of " + std::to_string(roster.size()));
  Label assumed = roster[scaled.order.front()];
  if (m_match >= 1.0) return PoDecision::accept(assumed);  // PO disabled
  if (scaled.degenerate) return PoDecision::reject();      // no confidence signal at all
  double sum = 0.0;
  for (int i = 1; i <= k; ++i) sum += scaled.scores[scaled.order[static_cast<size_t>(i)]];
  if (sum > static_cast<double>(k) * m_match) return PoDecision::reject();
  return PoDecision::accept(assumed);
}

InClassDistanceTable build_inclass_table(const Dataset& train_set, const DistanceKind& kind,
                                         int threads) {
  InClassDistanceTable table;
  std::vector<int> pages;
  for (const auto& [page, traces] : train_set.monitored) pages.push_back(page);
  std::vector<double> values(pages.size(), 0.0);
  std::vector<bool> single(pages.size(), false);
  parallel_for(pages.size(), threads, [&](size_t p0, size_t p1) {
    for (size_t p = p0; p < p1; ++p) {
      const auto& traces = train_set.monitored.at(pages[p]);
      if (traces.size() < 2) {
        single[p] = true;
        continue;
      }
      std::vector<const PacketSequence*> ptrs;
      ptrs.reserve(traces.size());
      for (const auto& t : traces) ptrs.push_back(&t);
      DistanceEvaluator eval(kind, ptrs);
      double sum = 0.0;
      size_t n_pairs = 0;
      for (size_t i = 0; i < ptrs.size(); ++i)
        for (size_t j = i + 1; j < ptrs.size(); ++j) {
          sum += eval.between(i, j);
          ++n_pairs;
        }
      values[p] = sum / static_cast<double>(n_pairs);
    }
  });
  for (size_t p = 0; p < pages.size(); ++p) {
    table.expected[pages[p]] = values[p];
    table.single_instance[pages[p]] = single[p];
  }
  return table;
}

PoDecision too_far_po(double distance_to_assumed, double expected, double m, Label assumed) {
  if (distance_to_assumed < 0.0 || expected < 0.0 || m < 0.0)
    throw Error("too_far_po: negative input");
  if (distance_to_assumed > m * expected) return PoDecision::reject();
  return PoDecision::accept(assumed);
}

PoDecision too_close_po(const std::map<int, double>& distances, Label assumed, int m) {
  if (!assumed.is_monitored()) throw Error("too_close_po: assumed class must be monitored");
  auto it = distances.find(assumed.page_id());
  if (it == distances.end()) throw Error("too_close_po: assumed class missing from distances");
  double d_assumed = it->second;
  int closer = 0;
  for (const auto& [page, d] : distances)
    if (page != assumed.page_id() && d < d_assumed) ++closer;
  if (closer >= m) return PoDecision::reject();
  return PoDecision::accept(assumed);
}

PoDecision ensemble_unanimous(const std::vector<Label>& labels) {
  if (labels.empty()) throw Error("ensemble_unanimous: no labels");
  const Label& first = labels.front();
  if (!first.is_monitored()) return PoDecision::reject();
  for (const Label& l : labels)
    if (l != first) return PoDecision::reject();
  return PoDecision::accept(first);
}

namespace {

// Plurality over per-classifier argmaxes. Ties go to the candidate whose
// best supporter has the lowest precision rank; any remaining tie prefers
// monitored classes in ascending page order.
size_t vote_winner(const std::vector<ScaledMatchVector>& scaled,
                   const std::vector<Label>& roster, const std::vector<int>& precision_rank) {
  if (scaled.empty()) throw Error("ensemble: no classifiers");
  for (const auto& s : scaled)
    if (s.scores.size() != roster.size()) throw Error("ensemble: roster mismatch");
  std::vector<int> votes(roster.size(), 0);
  std::vector<int> best_rank(roster.size(), std::numeric_limits<int>::max());
  for (size_t c = 0; c < scaled.size(); ++c) {
    size_t top = scaled[c].order.front();
    ++votes[top];
    int rank = c < precision_rank.size() ? precision_rank[c] : static_cast<int>(c);
    best_rank[top] = std::min(best_rank[top], rank);
  }
  size_t winner = 0;
  for (size_t i = 1; i < roster.size(); ++i) {
    if (votes[i] > votes[winner] ||
        (votes[i] == votes[winner] && votes[i] > 0 && best_rank[i] < best_rank[winner]))
      winner = i;
  }
  return winner;
}

}  // namespace

PoDecision ensemble_threshold(const std::vector<ScaledMatchVector>& scaled,
                              const std::vector<Label>& roster,
                              const std::vector<int>& precision_rank, double m_ensemble) {
  size_t winner = vote_winner(scaled, roster, precision_rank);
  if (!roster[winner].is_monitored()) return PoDecision::reject();
  double sum = 0.0;
  for (const auto& s : scaled) sum += s.scores[winner];
  if (sum < m_ensemble) return PoDecision::reject();
  return PoDecision::accept(roster[winner]);
}

PoDecision ensemble_weighted(const std::vector<ScaledMatchVector>& scaled,
                             const std::vector<Label>& roster,
                             const std::vector<int>& precision_rank,
                             const std::vector<double>& weights, double m) {
  if (weights.size() != scaled.size())
    throw Error("ensemble_weighted: weight/classifier count mismatch");
  for (double w : weights)
    if (w < 0.0) throw Error("ensemble_weighted: negative weight");
  size_t winner = vote_winner(scaled, roster, precision_rank);
  if (!roster[winner].is_monitored()) return PoDecision::reject();
  double sum = 0.0;
  for (size_t c = 0; c < scaled.size(); ++c) sum += weights[c] * scaled[c].scores[winner];
  if (sum < m) return PoDecision::reject();
  return PoDecision::accept(roster[winner]);
}

}  // namespace owf
