#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdsize/dataset.hpp"
#include "mdsize/forest.hpp"
#include "mdsize/rng.hpp"

namespace mdsize {

enum class ImputationMethod { CompleteCase, Mean, SingleRegression, RandomForest, Mice };

const char* to_string(ImputationMethod m);
ImputationMethod imputation_method_from_string(const std::string& name);

struct ImputationOptions {
  int cycles = 5;             // chained-equation cycles (fit and apply)
  int mice_m = 20;            // number of multiple imputations
  int forest_max_iter = 10;   // missForest-style outer iterations
  double ridge = 1e-6;        // fallback penalty for singular regressions
  ForestOptions forest;
};

/// Linear regression of one column on all other columns (ascending order),
/// optionally followed by the outcome. coef[0] is the intercept.
struct LinearImputationModel {
  Vector coef;
  double sigma = 0.0;  // residual sd used for stochastic draws
  bool with_outcome = false;
  bool ridge_used = false;

  double predict(const Matrix& x, Index row, Index target_col, double y) const;
};

/// Frozen imputation state learned on development data.
struct FittedImputer {
  ImputationMethod method = ImputationMethod::Mean;
  Vector means;
  int m = 1;
  int cycles = 5;
  bool include_outcome = false;
  std::vector<ColumnGroup> groups;

  // single-regression: one model per column.
  std::vector<std::optional<LinearImputationModel>> regression;
  // random-forest: one forest per column that was incomplete at fit time.
  std::vector<std::optional<RegressionForest>> forests;
  // mice: [imputation][column]; development models condition on the
  // outcome, application models do not.
  std::vector<std::vector<std::optional<LinearImputationModel>>> mice_development;
  std::vector<std::vector<std::optional<LinearImputationModel>>> mice_application;

  std::vector<std::string> warnings;
};

/// m completed copies of one source dataset.
struct CompletedData {
  ImputationMethod method = ImputationMethod::Mean;
  std::string source;
  std::vector<DataSet> sets;
};

struct ImputationFit {
  FittedImputer imputer;
  CompletedData completed;  // the development data as completed during fitting
};

/// Rows with no missing predictor, in their original order.
DataSet complete_case_filter(const DataSet& data);

ImputationFit fit_and_complete(ImputationMethod method, const DataSet& data, Rng& rng,
                               const ImputationOptions& opts = {});

FittedImputer fit_imputer(ImputationMethod method, const DataSet& data, Rng& rng,
                          const ImputationOptions& opts = {});

/// Fills missing cells using only fit-time parameters.
CompletedData apply_imputer(const FittedImputer& imp, const DataSet& data, bool use_outcome,
                            Rng& rng);

/// As apply_imputer, handing each completion to `sink` as soon as it is
/// produced instead of holding all m in memory.
void apply_imputer_each(const FittedImputer& imp, const DataSet& data, bool use_outcome, Rng& rng,
                        const std::function<void(DataSet&&)>& sink);

}  // namespace mdsize
