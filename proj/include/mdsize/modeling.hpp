#pragma once

#include <span>
#include <string>
#include <vector>

#include "mdsize/dataset.hpp"
#include "mdsize/rng.hpp"

namespace mdsize {

enum class ModelFamily { Mle, AicBackward, Lasso };

const char* to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& name);

struct FittedModel {
  ModelFamily family = ModelFamily::Mle;
  double intercept = 0.0;
  Vector coef;                 // original predictor scale; zero when excluded
  std::vector<bool> selected;
  bool converged = false;
  int iterations = 0;
  double lambda = 0.0;         // lasso only, standardized-predictor scale
  double deviance = 0.0;
  double score_max_abs = 0.0;  // max |gradient| (mle/aic) or KKT residual (lasso)
  bool separation = false;     // any |coef| > 20
  std::vector<double> aic_path;  // aic-backward: AIC after each accepted step
};

struct IrlsOptions {
  int max_iter = 50;
  double tol = 1e-8;  // relative deviance change
  double score_tol = 1e-6;
  double separation_threshold = 20.0;
};

/// Unpenalised logistic regression by iteratively reweighted least squares
/// with step halving. An intercept is always included.
FittedModel fit_logistic_mle(const Matrix& x, const Vector& y, const IrlsOptions& opts = {});

/// Greedy backward elimination on AIC = deviance + 2 (k + 1).
FittedModel fit_backward_aic(const Matrix& x, const Vector& y, const IrlsOptions& opts = {});

struct LassoOptions {
  int folds = 10;
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  double tol = 1e-7;          // KKT residual along the path
  double final_tol = 1e-9;    // KKT residual of the returned model
  bool early_stop = true;     // stop the path once deviance stops improving
  int max_outer = 200;
};

/// Outcome-stratified fold labels in [0, k).
std::vector<int> stratified_folds(const Vector& y, int k, Rng& rng);

/// Smallest lambda at which every penalized coefficient is zero.
double lasso_lambda_max(const Matrix& x, const Vector& y);

/// Penalized fit at a fixed lambda (standardized scale), no cross-validation.
FittedModel fit_lasso(const Matrix& x, const Vector& y, double lambda, const LassoOptions& opts = {});

/// Lambda chosen by cross-validated binomial deviance (minimum rule).
FittedModel fit_lasso_cv(const Matrix& x, const Vector& y, Rng& rng, const LassoOptions& opts = {});
FittedModel fit_lasso_cv(const Matrix& x, const Vector& y, const std::vector<int>& folds,
                         const LassoOptions& opts = {});

struct LassoPathPoint {
  double lambda;
  double intercept;
  Vector coef;  // original scale
  double deviance;
};

/// Warm-started solutions down the lambda sequence used by fit_lasso_cv.
std::vector<LassoPathPoint> lasso_path(const Matrix& x, const Vector& y, const LassoOptions& opts = {});

/// Element-wise average of intercepts and coefficients. For aic-backward,
/// variables selected in more than half the models form the pooled set and
/// each model is refit on its own completion before averaging.
FittedModel pool_models(std::span<const FittedModel> models,
                        std::span<const DataSet> completions = {});

inline constexpr double kProbabilityFloor = 1e-10;

Vector predict(const FittedModel& model, const Matrix& x);

/// Mean over models of per-model predictions. Either one matrix is shared by
/// all models or there is one matrix per model.
Vector predict_averaged(std::span<const FittedModel> models, std::span<const Matrix* const> xs);

Vector linear_predictor(const FittedModel& model, const Matrix& x);

}  // namespace mdsize
