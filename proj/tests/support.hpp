#pragma once

#include <random>

#include "mdsize/config.hpp"
#include "mdsize/datagen.hpp"
#include "mdsize/rng.hpp"

namespace mdsize::testing {

inline PredictorSpec pairs_spec(double rho, Index p = 10) {
  PredictorSpec s;
  s.p = p;
  s.rho = rho;
  return s;
}

inline Vector beta_vector(const std::vector<double>& b) {
  return Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
}

// All-informative predictors and betas with an intercept calibrated on a
// dedicated sample.
inline OutcomeSpec calibrated_outcome(const PredictorSpec& pred, double prevalence = 0.2,
                                      std::uint64_t seed = 1) {
  OutcomeSpec out;
  out.beta = beta_vector(default_beta());
  out.target_prevalence = prevalence;
  Rng rng = make_rng(seed);
  out.beta0 = calibrate_intercept(pred, out, rng, 200'000);
  return out;
}

// Bernoulli outcomes from a logistic model on given predictors.
inline Vector draw_outcomes(const Matrix& x, double b0, const Vector& beta, Rng& rng) {
  std::uniform_real_distribution<double> unif;
  Vector y(x.rows());
  const Vector eta = (x * beta).array() + b0;
  for (Index i = 0; i < x.rows(); ++i) y[i] = unif(rng) < expit(eta[i]) ? 1.0 : 0.0;
  return y;
}

inline Matrix normal_matrix(Index n, Index p, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix x(n, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = normal(rng);
  }
  return x;
}

inline double correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

}  // namespace mdsize::testing
