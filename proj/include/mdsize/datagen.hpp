#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mdsize/dataset.hpp"
#include "mdsize/rng.hpp"

namespace mdsize {

enum class PredictorMode { BlockPairsMvn, IndependentSummaries };

/// Univariate summary of one predictor for the no-IPD workflow.
struct VariableSummary {
  enum class Kind { Continuous, Categorical };

  std::string name;
  Kind kind = Kind::Continuous;
  double mean = 0.0;
  double variance = 1.0;
  // Categorical only; the first level is the reference and gets no column.
  std::vector<std::string> levels;
  std::vector<double> proportions;

  Index design_width() const {
    return kind == Kind::Continuous ? 1 : static_cast<Index>(levels.size()) - 1;
  }
};

struct PredictorSpec {
  Index p = 10;
  double rho = 0.0;
  PredictorMode mode = PredictorMode::BlockPairsMvn;
  std::vector<VariableSummary> summaries;

  /// Number of design columns (dummy coding applied).
  Index design_width() const;
  std::vector<ColumnGroup> groups() const;
  /// Block-diagonal covariance of the MVN predictors.
  Matrix covariance() const;
  void validate() const;
};

struct OutcomeSpec {
  Vector beta;
  std::optional<double> beta0;
  double target_prevalence = 0.2;
};

/// Draws an n x design_width predictor matrix.
Matrix sample_predictors(const PredictorSpec& pred, Index n, Rng& rng);

DataSet generate_population(const PredictorSpec& pred, const OutcomeSpec& out,
                            Index n, Rng& rng);

DataSet generate_from_summaries(const PredictorSpec& pred, const OutcomeSpec& out,
                                Index n, Rng& rng);

inline constexpr Index kCalibrationSampleSize = 1'000'000;

/// Intercept giving mean(expit(b0 + X beta)) = target prevalence on a
/// dedicated calibration sample, found by bisection on [-30, 30].
double calibrate_intercept(const PredictorSpec& pred, const OutcomeSpec& out,
                           Rng& rng, Index calibration_n = kCalibrationSampleSize);

/// Bisection for the intercept on a fixed vector of linear predictors.
double solve_intercept(const Vector& eta, double prevalence, double tol = 1e-7);

}  // namespace mdsize
