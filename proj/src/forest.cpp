#include "owf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "owf/common.hpp"
#include "owf/parallel.hpp"
#include "owf/rng.hpp"

namespace owf {

namespace {

struct Builder {
  const std::vector<std::vector<double>>& rows;
  const std::vector<int>& classes;
  int n_classes;
  size_t n_features;
  size_t mtry;
  Rng rng;
  RandomForest::Tree tree;
  std::vector<int32_t> leaf_counts;
  std::vector<size_t> samples;        // bootstrap indices, partitioned in place
  std::vector<int32_t> feature_pool;  // scratch for per-node feature draws
  std::vector<std::pair<double, int>> scratch;

  bool node_pure(size_t begin, size_t end) const {
    int c0 = classes[samples[begin]];
    for (size_t i = begin + 1; i < end; ++i)
      if (classes[samples[i]] != c0) return false;
    return true;
  }

  int32_t make_leaf(size_t begin, size_t end) {
    int32_t offset = static_cast<int32_t>(leaf_counts.size());
    leaf_counts.resize(leaf_counts.size() + static_cast<size_t>(n_classes), 0);
    for (size_t i = begin; i < end; ++i) ++leaf_counts[offset + classes[samples[i]]];
    RandomForest::Node node;
    node.feature = -1;
    node.dist_offset = offset;
    tree.nodes.push_back(node);
    return static_cast<int32_t>(tree.nodes.size() - 1);
  }

  // Gini-best midpoint split among mtry sampled features. When every sampled
  // feature is constant on the node, keeps scanning the rest of the pool so
  // impure nodes still split; a node leafs impure only when the rows are
  // literally identical across classes.
  bool best_split(size_t begin, size_t end, int32_t* feature, double* threshold) {
    size_t m = end - begin;
    // Draw mtry distinct features into the pool's front.
    for (size_t i = 0; i < mtry; ++i) {
      size_t j = i + rng.index(n_features - i);
      std::swap(feature_pool[i], feature_pool[j]);
    }
    double best_score = std::numeric_limits<double>::infinity();
    int32_t best_feature = -1;
    double best_threshold = 0.0;
    std::vector<int> left_counts(static_cast<size_t>(n_classes));
    std::vector<int> total_counts(static_cast<size_t>(n_classes), 0);
    for (size_t i = begin; i < end; ++i) ++total_counts[classes[samples[i]]];

    for (size_t fi = 0; fi < n_features; ++fi) {
      if (fi >= mtry && best_feature >= 0) break;  // fallback scan only while empty-handed
      int32_t f = feature_pool[fi];
      scratch.clear();
      for (size_t i = begin; i < end; ++i)
        scratch.emplace_back(rows[samples[i]][static_cast<size_t>(f)], classes[samples[i]]);
      std::sort(scratch.begin(), scratch.end());
      if (scratch.front().first == scratch.back().first) continue;  // constant feature

      std::fill(left_counts.begin(), left_counts.end(), 0);
      size_t left_n = 0;
      for (size_t i = 0; i + 1 < m; ++i) {
        ++left_counts[static_cast<size_t>(scratch[i].second)];
        ++left_n;
        if (scratch[i].first == scratch[i + 1].first) continue;
        size_t right_n = m - left_n;
        double gl = 0.0, gr = 0.0;
        for (int c = 0; c < n_classes; ++c) {
          double lc = left_counts[static_cast<size_t>(c)];
          double rc = total_counts[static_cast<size_t>(c)] - lc;
          gl += lc * lc;
          gr += rc * rc;
        }
        // Weighted Gini = sum_n (1 - sum p^2); minimizing it maximizes
        // gl/left_n + gr/right_n.
        double score = -(gl / static_cast<double>(left_n) + gr / static_cast<double>(right_n));
        if (score < best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = (scratch[i].first + scratch[i + 1].first) / 2.0;
        }
      }
    }
    if (best_feature < 0) return false;
    *feature = best_feature;
    *threshold = best_threshold;
    return true;
  }

  int32_t build(size_t begin, size_t end) {
    if (end - begin == 1 || node_pure(begin, end)) return make_leaf(begin, end);
    int32_t feature;
    double threshold;
    if (!best_split(begin, end, &feature, &threshold)) return make_leaf(begin, end);

    auto mid_it = std::partition(samples.begin() + static_cast<ptrdiff_t>(begin),
                                 samples.begin() + static_cast<ptrdiff_t>(end), [&](size_t s) {
                                   return rows[s][static_cast<size_t>(feature)] <= threshold;
                                 });
    size_t mid = static_cast<size_t>(mid_it - samples.begin());
    if (mid == begin || mid == end) return make_leaf(begin, end);  // numeric edge

    RandomForest::Node node;
    node.feature = feature;
    node.threshold = threshold;
    tree.nodes.push_back(node);
    int32_t self = static_cast<int32_t>(tree.nodes.size() - 1);
    int32_t left = build(begin, mid);
    int32_t right = build(mid, end);
    tree.nodes[static_cast<size_t>(self)].left = left;
    tree.nodes[static_cast<size_t>(self)].right = right;
    return self;
  }
};

}  // namespace

void RandomForest::train(const std::vector<std::vector<double>>& rows,
                         const std::vector<int>& classes, int n_classes, const Config& config) {
  if (rows.empty()) throw Error("forest: empty training set");
  if (rows.size() != classes.size()) throw Error("forest: rows/classes size mismatch");
  n_classes_ = n_classes;
  size_t n_features = rows[0].size();
  size_t mtry = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
  mtry = std::max<size_t>(1, std::min(mtry, n_features));

  trees_.assign(static_cast<size_t>(config.trees), Tree{});
  std::vector<std::vector<int32_t>> counts(static_cast<size_t>(config.trees));

  parallel_for(static_cast<size_t>(config.trees), config.threads, [&](size_t t0, size_t t1) {
    for (size_t t = t0; t < t1; ++t) {
      // Per-tree stream keyed by index: schedule-independent.
      Builder b{rows,
                classes,
                n_classes,
                n_features,
                mtry,
                Rng(mix64(config.seed, 0xf04e57ULL, t)),
                {},
                {},
                {},
                {},
                {}};
      b.samples.resize(rows.size());
      for (size_t i = 0; i < rows.size(); ++i) b.samples[i] = b.rng.index(rows.size());
      b.feature_pool.resize(n_features);
      std::iota(b.feature_pool.begin(), b.feature_pool.end(), 0);
      b.build(0, b.samples.size());
      trees_[t] = std::move(b.tree);
      counts[t] = std::move(b.leaf_counts);
    }
  });

  // Concatenate leaf blocks with per-tree offsets rebased.
  leaf_counts_.clear();
  for (size_t t = 0; t < trees_.size(); ++t) {
    int32_t base = static_cast<int32_t>(leaf_counts_.size());
    for (auto& node : trees_[t].nodes)
      if (node.feature < 0) node.dist_offset += base;
    leaf_counts_.insert(leaf_counts_.end(), counts[t].begin(), counts[t].end());
  }
}

std::vector<double> RandomForest::match(const std::vector<double>& row) const {
  std::vector<double> out(static_cast<size_t>(n_classes_), 0.0);
  for (const auto& tree : trees_) {
    int32_t at = 0;
    for (;;) {
      const Node& node = tree.nodes[static_cast<size_t>(at)];
      if (node.feature < 0) {
        const int32_t* dist = &leaf_counts_[static_cast<size_t>(node.dist_offset)];
        int32_t total = 0;
        for (int c = 0; c < n_classes_; ++c) total += dist[c];
        for (int c = 0; c < n_classes_; ++c)
          if (dist[c]) out[static_cast<size_t>(c)] += static_cast<double>(dist[c]) / total;
        break;
      }
      at = row[static_cast<size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
  }
  return out;
}

void RandomForest::restore(std::vector<Tree> trees, std::vector<int32_t> leaf_counts,
                           int n_classes) {
  trees_ = std::move(trees);
  leaf_counts_ = std::move(leaf_counts);
  n_classes_ = n_classes;
}

}  // namespace owf
