#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdsize/common.hpp"

namespace mdsize {

/// One predictor variable and the design columns it occupies. Continuous
/// variables occupy one column; categorical variables occupy one dummy
/// column per non-reference level.
struct ColumnGroup {
  std::string name;
  std::vector<Index> columns;
  bool categorical = false;
};

std::vector<ColumnGroup> singleton_groups(Index p);

/// Predictor matrix with per-cell observation mask, binary outcome and
/// (for simulated data) the generating probabilities.
struct DataSet {
  Matrix x;
  Mask observed;  // true = observed
  Vector y;       // entries in {0, 1}
  std::optional<Vector> true_prob;
  std::vector<ColumnGroup> groups;
  double retained_fraction = 1.0;
  std::vector<std::string> warnings;

  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }

  bool fully_observed() const { return observed.all(); }
  Index incomplete_rows() const;
  Index missing_cells() const { return observed.size() - observed.count(); }

  DataSet select_rows(std::span<const Index> rows) const;
  /// Leading `n` rows.
  DataSet head(Index n) const;

  /// Throws ShapeError when sizes are inconsistent.
  void check_shape() const;
};

}  // namespace mdsize
