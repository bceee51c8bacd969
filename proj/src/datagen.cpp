#include "mdsize/datagen.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace mdsize {

Index PredictorSpec::design_width() const {
  if (mode == PredictorMode::BlockPairsMvn) return p;
  Index width = 0;
  for (const auto& s : summaries) width += s.design_width();
  return width;
}

std::vector<ColumnGroup> PredictorSpec::groups() const {
  if (mode == PredictorMode::BlockPairsMvn) return singleton_groups(p);
  std::vector<ColumnGroup> out;
  Index col = 0;
  for (const auto& s : summaries) {
    ColumnGroup g{s.name, {}, s.kind == VariableSummary::Kind::Categorical};
    for (Index k = 0; k < s.design_width(); ++k) g.columns.push_back(col++);
    out.push_back(std::move(g));
  }
  return out;
}

Matrix PredictorSpec::covariance() const {
  Matrix sigma = Matrix::Identity(p, p);
  for (Index j = 0; j + 1 < p; j += 2) {
    sigma(j, j + 1) = rho;
    sigma(j + 1, j) = rho;
  }
  return sigma;
}

void PredictorSpec::validate() const {
  if (mode == PredictorMode::BlockPairsMvn) {
    if (p < 1) throw Error(ErrorKind::Config, "predictors: p must be >= 1");
    if (!(rho > -1.0 && rho < 1.0)) {
      std::ostringstream msg;
      msg << "predictors: rho = " << rho << " gives a covariance that is not positive definite";
      throw Error(ErrorKind::InvalidCovariance, msg.str());
    }
    return;
  }
  if (summaries.empty()) {
    throw Error(ErrorKind::Config, "predictors: independent-summaries mode needs per-variable summaries");
  }
  for (const auto& s : summaries) {
    if (s.kind == VariableSummary::Kind::Continuous) {
      if (!(s.variance >= 0.0) || !std::isfinite(s.mean)) {
        throw Error(ErrorKind::Config, "predictors: variable '" + s.name + "' needs a finite mean and variance >= 0");
      }
    } else {
      if (s.levels.size() < 2 || s.levels.size() != s.proportions.size()) {
        throw Error(ErrorKind::Config, "predictors: variable '" + s.name + "' needs >= 2 levels with one proportion each");
      }
      const double total = std::accumulate(s.proportions.begin(), s.proportions.end(), 0.0);
      if (std::abs(total - 1.0) > 1e-9) {
        throw Error(ErrorKind::Config, "predictors: proportions of '" + s.name + "' do not sum to 1");
      }
      for (double q : s.proportions) {
        if (q < 0.0) throw Error(ErrorKind::Config, "predictors: negative proportion in '" + s.name + "'");
      }
    }
  }
}

namespace {

Matrix sample_mvn(const PredictorSpec& pred, Index n, Rng& rng) {
  const Matrix sigma = pred.covariance();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidCovariance, "predictors: covariance is not positive definite");
  }
  const Matrix lower = llt.matrixL();
  const Index p = pred.p;
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, p);
  Vector z(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z[j] = normal(rng);
    x.row(i).noalias() = (lower * z).transpose();
  }
  return x;
}

Matrix sample_summaries(const PredictorSpec& pred, Index n, Rng& rng) {
  Matrix x = Matrix::Zero(n, pred.design_width());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    Index col = 0;
    for (const auto& s : pred.summaries) {
      if (s.kind == VariableSummary::Kind::Continuous) {
        x(i, col++) = s.mean + std::sqrt(s.variance) * normal(rng);
        continue;
      }
      const double u = unif(rng);
      double cum = 0.0;
      std::size_t level = s.levels.size() - 1;
      for (std::size_t k = 0; k < s.proportions.size(); ++k) {
        cum += s.proportions[k];
        if (u < cum) {
          level = k;
          break;
        }
      }
      if (level > 0) x(i, col + static_cast<Index>(level) - 1) = 1.0;
      col += s.design_width();
    }
  }
  return x;
}

void check_beta(const PredictorSpec& pred, const OutcomeSpec& out) {
  if (out.beta.size() != pred.design_width()) {
    std::ostringstream msg;
    msg << "outcome: beta has " << out.beta.size() << " entries but the design has "
        << pred.design_width() << " columns";
    throw Error(ErrorKind::Shape, msg.str());
  }
}

DataSet finish_outcome(Matrix x, const PredictorSpec& pred, const OutcomeSpec& out, Rng& rng) {
  if (!out.beta0) {
    throw Error(ErrorKind::Usage, "outcome: intercept unset; run calibrate_intercept first");
  }
  DataSet data;
  const Index n = x.rows();
  Vector eta = (x * out.beta).array() + *out.beta0;
  Vector prob(n);
  Vector y(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    prob[i] = expit(eta[i]);
    y[i] = unif(rng) < prob[i] ? 1.0 : 0.0;
  }
  data.observed = Mask::Constant(n, x.cols(), true);
  data.x = std::move(x);
  data.y = std::move(y);
  data.true_prob = std::move(prob);
  data.groups = pred.groups();
  return data;
}

}  // namespace

Matrix sample_predictors(const PredictorSpec& pred, Index n, Rng& rng) {
  pred.validate();
  return pred.mode == PredictorMode::BlockPairsMvn ? sample_mvn(pred, n, rng)
                                                   : sample_summaries(pred, n, rng);
}

DataSet generate_population(const PredictorSpec& pred, const OutcomeSpec& out,
                            Index n, Rng& rng) {
  if (n < 1) throw Error(ErrorKind::Domain, "generate_population: n must be >= 1");
  pred.validate();
  check_beta(pred, out);
  if (!out.beta0) {
    throw Error(ErrorKind::Usage, "outcome: intercept unset; run calibrate_intercept first");
  }
  Matrix x = sample_predictors(pred, n, rng);
  return finish_outcome(std::move(x), pred, out, rng);
}

DataSet generate_from_summaries(const PredictorSpec& pred, const OutcomeSpec& out,
                                Index n, Rng& rng) {
  if (pred.mode != PredictorMode::IndependentSummaries) {
    throw Error(ErrorKind::Config, "generate_from_summaries: predictor spec is not in independent-summaries mode");
  }
  return generate_population(pred, out, n, rng);
}

double solve_intercept(const Vector& eta, double prevalence, double tol) {
  auto mean_prob = [&](double b0) {
    double s = 0.0;
    for (Index i = 0; i < eta.size(); ++i) s += expit(b0 + eta[i]);
    return s / static_cast<double>(eta.size());
  };
  double lo = -30.0;
  double hi = 30.0;
  if (mean_prob(lo) > prevalence || mean_prob(hi) < prevalence) {
    throw Error(ErrorKind::CalibrationFailure,
                "calibrate_intercept: target prevalence is not bracketed by intercepts in [-30, 30]");
  }
  double mid = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double m = mean_prob(mid);
    if (std::abs(m - prevalence) <= tol || hi - lo < 1e-12) break;
    if (m < prevalence) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

double calibrate_intercept(const PredictorSpec& pred, const OutcomeSpec& out,
                           Rng& rng, Index calibration_n) {
  if (!(out.target_prevalence > 0.001 && out.target_prevalence < 0.999)) {
    throw Error(ErrorKind::Domain, "calibrate_intercept: target prevalence must lie in (0.001, 0.999)");
  }
  pred.validate();
  check_beta(pred, out);
  const Matrix x = sample_predictors(pred, calibration_n, rng);
  const Vector eta = x * out.beta;
  return solve_intercept(eta, out.target_prevalence);
}

}  // namespace mdsize
