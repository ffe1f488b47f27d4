#pragma once

#include <cstdint>
#include <vector>

namespace owf {

/// Random forest over dense feature rows with integer class ids. Gini
/// impurity, sqrt-of-|F| feature subsampling per split, midpoint thresholds,
/// grown to purity (or until no split separates the node). Bootstrap sample
/// per tree has the same size as the input.
class RandomForest {
 public:
  struct Config {
    int trees = 1000;
    int threads = 1;
    uint64_t seed = 0;
  };

  void train(const std::vector<std::vector<double>>& rows, const std::vector<int>& classes,
             int n_classes, const Config& config);

  /// Per-class leaf-fraction sums: out[c] = sum over trees of L(c)/sum_x L(x).
  /// Sums to the tree count (exactly, when every reached leaf is pure).
  std::vector<double> match(const std::vector<double>& row) const;

  int n_classes() const { return n_classes_; }
  int n_trees() const { return static_cast<int>(trees_.size()); }

  struct Node {
    int32_t feature = -1;    // -1 = leaf
    double threshold = 0.0;
    int32_t left = -1, right = -1;
    int32_t dist_offset = -1;  // leaves: offset into class_counts_
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  // Serialization hooks (classifier container writes these directly).
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<int32_t>& leaf_counts() const { return leaf_counts_; }
  void restore(std::vector<Tree> trees, std::vector<int32_t> leaf_counts, int n_classes);

 private:
  std::vector<Tree> trees_;
  std::vector<int32_t> leaf_counts_;  // concatenated per-leaf class counts
  int n_classes_ = 0;
};

}  // namespace owf
