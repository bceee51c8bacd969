#include "mdsize/modeling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mdsize {

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Mle: return "mle";
    case ModelFamily::AicBackward: return "aic-backward";
    case ModelFamily::Lasso: return "lasso";
  }
  return "?";
}

ModelFamily model_family_from_string(const std::string& name) {
  if (name == "mle") return ModelFamily::Mle;
  if (name == "aic-backward") return ModelFamily::AicBackward;
  if (name == "lasso") return ModelFamily::Lasso;
  throw Error(ErrorKind::Config, "unknown model family '" + name + "'");
}

namespace {

double binomial_deviance(const Vector& eta, const Vector& y) {
  double dev = 0.0;
  for (Index i = 0; i < eta.size(); ++i) dev += log1pexp(eta[i]) - y[i] * eta[i];
  return 2.0 * dev;
}

void check_outcome(const Vector& y) {
  Index events = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw Error(ErrorKind::Domain, "logistic: outcomes must be 0 or 1");
    events += y[i] == 1.0 ? 1 : 0;
  }
  if (events == 0 || events == y.size()) {
    throw Error(ErrorKind::DegenerateOutcome, "logistic: outcome has a single class");
  }
}

Matrix with_intercept(const Matrix& x) {
  Matrix a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return a;
}

void check_rank(const Matrix& a) {
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() == a.cols()) return;
  std::ostringstream msg;
  msg << "logistic: design is rank deficient; offending columns:";
  const auto& perm = qr.colsPermutation().indices();
  for (Index k = qr.rank(); k < a.cols(); ++k) {
    const Index c = perm[k];
    if (c == 0) {
      msg << " intercept";
    } else {
      msg << " x" << c;
    }
  }
  throw Error(ErrorKind::RankDeficient, msg.str());
}

Matrix select_columns(const Matrix& x, const std::vector<Index>& cols) {
  Matrix out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = x.col(cols[k]);
  return out;
}

FittedModel expand(const FittedModel& sub, const std::vector<Index>& cols, Index p) {
  FittedModel full = sub;
  full.coef = Vector::Zero(p);
  full.selected.assign(static_cast<std::size_t>(p), false);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    full.coef[cols[k]] = sub.coef[static_cast<Index>(k)];
    full.selected[static_cast<std::size_t>(cols[k])] = true;
  }
  return full;
}

bool identical(const FittedModel& a, const FittedModel& b) {
  return a.intercept == b.intercept && a.coef.size() == b.coef.size() && a.coef == b.coef &&
         a.selected == b.selected;
}

}  // namespace

FittedModel fit_logistic_mle(const Matrix& x, const Vector& y, const IrlsOptions& opts) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (y.size() != n) throw Error(ErrorKind::Shape, "logistic: outcome length does not match rows");
  if (n <= p + 1) throw Error(ErrorKind::DegenerateFit, "logistic: need more rows than parameters");
  check_outcome(y);
  const Matrix a = with_intercept(x);
  check_rank(a);

  Vector beta = Vector::Zero(p + 1);
  beta[0] = logit(y.mean());
  Vector eta = a * beta;
  double dev = binomial_deviance(eta, y);

  FittedModel model;
  model.family = ModelFamily::Mle;
  Vector mu(n);
  Vector w(n);
  Vector score(p + 1);
  bool dev_converged = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    for (Index i = 0; i < n; ++i) {
      mu[i] = expit(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-300);
    }
    score.noalias() = a.transpose() * (y - mu);
    if (dev_converged && score.cwiseAbs().maxCoeff() <= opts.score_tol) break;

    const Matrix h = a.transpose() * w.asDiagonal() * a;
    Eigen::LLT<Matrix> llt(h);
    Vector step = llt.info() == Eigen::Success ? Vector(llt.solve(score)) : Vector(h.ldlt().solve(score));

    Vector next = beta + step;
    Vector next_eta = a * next;
    double next_dev = binomial_deviance(next_eta, y);
    for (int half = 0; half < 30 && !(next_dev <= dev * (1.0 + 1e-12) + 1e-12); ++half) {
      step *= 0.5;
      next = beta + step;
      next_eta = a * next;
      next_dev = binomial_deviance(next_eta, y);
    }
    const double change = std::abs(dev - next_dev) / (std::abs(next_dev) + 0.1);
    beta = next;
    eta = next_eta;
    dev = next_dev;
    dev_converged = change < opts.tol;
    if (beta.tail(p).cwiseAbs().maxCoeff() > 1e3) break;  // diverging under separation
  }
  for (Index i = 0; i < n; ++i) mu[i] = expit(eta[i]);
  score.noalias() = a.transpose() * (y - mu);

  model.intercept = beta[0];
  model.coef = beta.tail(p);
  model.selected.assign(static_cast<std::size_t>(p), true);
  model.deviance = dev;
  model.iterations = iter;
  model.score_max_abs = score.cwiseAbs().maxCoeff();
  model.separation = p > 0 && model.coef.cwiseAbs().maxCoeff() > opts.separation_threshold;
  model.converged = dev_converged && model.score_max_abs <= opts.score_tol && !model.separation;
  return model;
}

FittedModel fit_backward_aic(const Matrix& x, const Vector& y, const IrlsOptions& opts) {
  const Index p = x.cols();
  std::vector<Index> current(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) current[static_cast<std::size_t>(j)] = j;

  auto aic_of = [](const FittedModel& m, std::size_t k) {
    return m.deviance + 2.0 * (static_cast<double>(k) + 1.0);
  };
  FittedModel best = fit_logistic_mle(x, y, opts);
  double best_aic = aic_of(best, current.size());
  std::vector<double> path{best_aic};

  while (!current.empty()) {
    double step_aic = best_aic;
    std::size_t drop = current.size();
    FittedModel step_model;
    for (std::size_t k = 0; k < current.size(); ++k) {
      std::vector<Index> trial = current;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(k));
      FittedModel m;
      try {
        m = fit_logistic_mle(select_columns(x, trial), y, opts);
      } catch (const Error&) {
        continue;
      }
      const double aic = aic_of(m, trial.size());
      if (aic < step_aic) {
        step_aic = aic;
        drop = k;
        step_model = std::move(m);
      }
    }
    if (drop == current.size()) break;
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
    best_aic = step_aic;
    path.push_back(step_aic);
    best = expand(step_model, current, p);
  }
  if (best.coef.size() != p) best = expand(best, current, p);
  best.family = ModelFamily::AicBackward;
  best.aic_path = std::move(path);
  return best;
}

FittedModel pool_models(std::span<const FittedModel> models, std::span<const DataSet> completions) {
  if (models.empty()) throw Error(ErrorKind::Usage, "pool_models: no models to pool");
  const FittedModel& first = models.front();
  for (const auto& m : models) {
    if (m.family != first.family) throw Error(ErrorKind::Usage, "pool_models: mixed model families");
    if (m.coef.size() != first.coef.size()) throw Error(ErrorKind::Shape, "pool_models: mixed column layouts");
  }
  const bool all_identical = std::all_of(models.begin(), models.end(),
                                         [&](const FittedModel& m) { return identical(m, first); });
  if (models.size() == 1 || all_identical) return first;

  const Index p = first.coef.size();
  std::vector<FittedModel> refits;
  std::span<const FittedModel> source = models;
  std::vector<bool> pooled_selected(static_cast<std::size_t>(p), false);

  if (first.family == ModelFamily::AicBackward) {
    std::vector<Index> keep;
    for (Index j = 0; j < p; ++j) {
      std::size_t votes = 0;
      for (const auto& m : models) votes += m.selected[static_cast<std::size_t>(j)] ? 1 : 0;
      if (2 * votes > models.size()) {
        keep.push_back(j);
        pooled_selected[static_cast<std::size_t>(j)] = true;
      }
    }
    const bool same_sets = std::all_of(models.begin(), models.end(), [&](const FittedModel& m) {
      return m.selected == pooled_selected;
    });
    if (!same_sets) {
      if (completions.size() != models.size()) {
        throw Error(ErrorKind::Usage, "pool_models: aic-backward pooling needs the completions to refit");
      }
      for (std::size_t t = 0; t < models.size(); ++t) {
        auto m = fit_logistic_mle(select_columns(completions[t].x, keep), completions[t].y);
        m = expand(m, keep, p);
        m.family = ModelFamily::AicBackward;
        refits.push_back(std::move(m));
      }
      source = refits;
    }
  } else {
    for (const auto& m : models) {
      for (Index j = 0; j < p; ++j) {
        if (m.selected[static_cast<std::size_t>(j)]) pooled_selected[static_cast<std::size_t>(j)] = true;
      }
    }
  }

  FittedModel pooled;
  pooled.family = first.family;
  pooled.coef = Vector::Zero(p);
  pooled.converged = true;
  for (const auto& m : source) {
    pooled.intercept += m.intercept;
    pooled.coef += m.coef;
    pooled.lambda += m.lambda;
    pooled.deviance += m.deviance;
    pooled.converged = pooled.converged && m.converged;
    pooled.separation = pooled.separation || m.separation;
    pooled.iterations = std::max(pooled.iterations, m.iterations);
    pooled.score_max_abs = std::max(pooled.score_max_abs, m.score_max_abs);
  }
  const double count = static_cast<double>(source.size());
  pooled.intercept /= count;
  pooled.coef /= count;
  pooled.lambda /= count;
  pooled.deviance /= count;
  pooled.selected = pooled_selected;
  return pooled;
}

Vector linear_predictor(const FittedModel& model, const Matrix& x) {
  if (x.cols() != model.coef.size()) {
    std::ostringstream msg;
    msg << "predict: matrix has " << x.cols() << " columns but the model has " << model.coef.size();
    throw Error(ErrorKind::Shape, msg.str());
  }
  Vector eta = x * model.coef;
  eta.array() += model.intercept;
  return eta;
}

Vector predict(const FittedModel& model, const Matrix& x) {
  Vector eta = linear_predictor(model, x);
  for (Index i = 0; i < eta.size(); ++i) {
    eta[i] = std::clamp(expit(eta[i]), kProbabilityFloor, 1.0 - kProbabilityFloor);
  }
  return eta;
}

Vector predict_averaged(std::span<const FittedModel> models, std::span<const Matrix* const> xs) {
  if (models.empty()) throw Error(ErrorKind::Usage, "predict_averaged: no models");
  if (xs.size() != 1 && xs.size() != models.size()) {
    throw Error(ErrorKind::Shape, "predict_averaged: need one matrix or one per model");
  }
  Vector total = Vector::Zero(xs.front()->rows());
  for (std::size_t t = 0; t < models.size(); ++t) {
    const Matrix& x = *xs[xs.size() == 1 ? 0 : t];
    if (x.rows() != total.size()) throw Error(ErrorKind::Shape, "predict_averaged: row counts differ");
    total += predict(models[t], x);
  }
  return total / static_cast<double>(models.size());
}

}  // namespace mdsize
