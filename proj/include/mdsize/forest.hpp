#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mdsize/common.hpp"
#include "mdsize/rng.hpp"

namespace mdsize {

struct ForestOptions {
  int n_trees = 100;
  int max_depth = 8;
  int min_leaf = 5;
  // Features tried per split; 0 selects max(1, q / 3) for q features.
  int mtry = 0;
  // Candidate split points per feature (quantile bins of the training data).
  int max_bins = 64;
};

/// Bagged depth-limited CART regression forest. Splits are searched over
/// per-feature quantile bins computed once from the training matrix.
class RegressionForest {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left iff x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  RegressionForest() = default;

  /// Fits on the rows of `x` listed in `rows`, predicting `target`.
  static RegressionForest fit(const Matrix& x, const Vector& target,
                              std::span<const Index> rows, const ForestOptions& opts, Rng& rng);

  double predict(const double* row, Index stride) const;
  double predict_row(const Matrix& x, Index i) const { return predict(x.data() + i, x.rows()); }

  Index n_features() const { return n_features_; }
  const std::vector<std::vector<Node>>& trees() const { return trees_; }
  std::vector<std::vector<Node>>& mutable_trees() { return trees_; }
  void set_n_features(Index q) { n_features_ = q; }

 private:
  Index n_features_ = 0;
  std::vector<std::vector<Node>> trees_;
};

}  // namespace mdsize
