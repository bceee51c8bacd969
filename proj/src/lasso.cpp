#include "mdsize/modeling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mdsize {

namespace {

struct Standardized {
  Matrix z;
  Vector mean;
  Vector sd;  // zero for constant columns, which stay out of the model
};

Standardized standardize(const Matrix& x) {
  Standardized s;
  const Index n = x.rows();
  s.mean = x.colwise().mean().transpose();
  s.sd.resize(x.cols());
  s.z.resize(n, x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean[j]).square().sum() / static_cast<double>(n);
    s.sd[j] = var > 1e-24 ? std::sqrt(var) : 0.0;
    if (s.sd[j] > 0.0) {
      s.z.col(j) = (x.col(j).array() - s.mean[j]) / s.sd[j];
    } else {
      s.z.col(j).setZero();
    }
  }
  return s;
}

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double mean_deviance_term(double eta, double y) { return log1pexp(eta) - y * eta; }

// Penalized objective: mean negative log-likelihood + lambda * |b|_1.
double objective(const Matrix& z, const Vector& y, const Vector& beta, double lambda, Vector& eta) {
  eta = z * beta.tail(z.cols());
  eta.array() += beta[0];
  double f = 0.0;
  for (Index i = 0; i < y.size(); ++i) f += mean_deviance_term(eta[i], y[i]);
  return f / static_cast<double>(y.size()) + lambda * beta.tail(z.cols()).cwiseAbs().sum();
}

// Largest violation of the optimality conditions.
double kkt_residual(const Matrix& z, const Vector& y, const Vector& beta, double lambda,
                    const Vector& eta, const Vector& sd) {
  const double n = static_cast<double>(y.size());
  Vector resid(y.size());
  for (Index i = 0; i < y.size(); ++i) resid[i] = y[i] - expit(eta[i]);
  double worst = std::abs(resid.sum() / n);
  const Vector g = z.transpose() * resid / n;
  for (Index j = 0; j < z.cols(); ++j) {
    if (sd[j] == 0.0) continue;
    const double b = beta[j + 1];
    const double v = b != 0.0 ? std::abs(g[j] - lambda * (b > 0 ? 1.0 : -1.0))
                              : std::max(0.0, std::abs(g[j]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

struct SolveResult {
  double kkt = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Proximal Newton: each outer step solves the weighted quadratic model by
// coordinate descent on its (p+1)x(p+1) Gram matrix.
SolveResult solve_penalized(const Matrix& z, const Vector& y, const Vector& sd, double lambda,
                            Vector& beta, double tol, int max_outer) {
  const Index n = z.rows();
  const Index p = z.cols();
  const double nd = static_cast<double>(n);
  Vector eta;
  double f = objective(z, y, beta, lambda, eta);
  SolveResult res;
  Matrix a(n, p + 1);
  a.col(0).setOnes();
  a.rightCols(p) = z;
  Vector w(n);
  Vector r(n);
  for (int outer = 0; outer < max_outer; ++outer) {
    res.kkt = kkt_residual(z, y, beta, lambda, eta, sd);
    res.iterations = outer;
    if (res.kkt <= tol) {
      res.converged = true;
      return res;
    }
    for (Index i = 0; i < n; ++i) {
      const double mu = expit(eta[i]);
      w[i] = std::max(mu * (1.0 - mu), 1e-5);
      r[i] = eta[i] + (y[i] - mu) / w[i];
    }
    const Matrix gram = a.transpose() * w.asDiagonal() * a / nd;
    const Vector c = a.transpose() * (w.array() * r.array()).matrix() / nd;

    Vector cand = beta;
    Vector gb = gram * cand;  // running gram * cand
    for (int sweep = 0; sweep < 100000; ++sweep) {
      double max_move = 0.0;
      for (Index j = 0; j <= p; ++j) {
        if (j > 0 && sd[j - 1] == 0.0) continue;
        const double gjj = gram(j, j);
        if (gjj <= 0.0) continue;
        const double partial = c[j] - gb[j] + gjj * cand[j];
        const double next = j == 0 ? partial / gjj : soft(partial, lambda) / gjj;
        const double move = next - cand[j];
        if (move != 0.0) {
          gb += gram.col(j) * move;
          cand[j] = next;
          max_move = std::max(max_move, std::abs(move) * std::sqrt(gjj));
        }
      }
      if (max_move < 1e-14) break;
    }

    // Backtrack if the quadratic model overshoots.
    Vector step = cand - beta;
    Vector trial_eta;
    double trial_f = objective(z, y, cand, lambda, trial_eta);
    for (int half = 0; half < 40 && trial_f > f + 1e-15 * std::abs(f); ++half) {
      step *= 0.5;
      cand = beta + step;
      trial_f = objective(z, y, cand, lambda, trial_eta);
    }
    if (trial_f > f + 1e-15 * std::abs(f)) break;
    beta = cand;
    eta = trial_eta;
    f = trial_f;
  }
  res.kkt = kkt_residual(z, y, beta, lambda, eta, sd);
  res.converged = res.kkt <= tol;
  return res;
}

double binomial_deviance(const Matrix& x, const Vector& y, double intercept, const Vector& coef) {
  Vector eta = x * coef;
  double dev = 0.0;
  for (Index i = 0; i < y.size(); ++i) dev += mean_deviance_term(eta[i] + intercept, y[i]);
  return 2.0 * dev;
}

void check_inputs(const Matrix& x, const Vector& y) {
  if (y.size() != x.rows()) throw Error(ErrorKind::Shape, "lasso: outcome length does not match rows");
  Index events = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw Error(ErrorKind::Domain, "lasso: outcomes must be 0 or 1");
    events += y[i] == 1.0 ? 1 : 0;
  }
  if (events == 0 || events == y.size()) {
    throw Error(ErrorKind::DegenerateOutcome, "lasso: outcome has a single class");
  }
}

void to_original_scale(const Standardized& s, const Vector& beta, double& intercept, Vector& coef) {
  const Index p = s.z.cols();
  coef = Vector::Zero(p);
  intercept = beta[0];
  for (Index j = 0; j < p; ++j) {
    if (s.sd[j] == 0.0) continue;
    coef[j] = beta[j + 1] / s.sd[j];
    intercept -= coef[j] * s.mean[j];
  }
}

std::vector<double> lambda_sequence(double lambda_max, const LassoOptions& opts) {
  if (opts.n_lambda < 2) throw Error(ErrorKind::Config, "lasso: n_lambda must be at least 2");
  if (!(opts.lambda_min_ratio > 0.0 && opts.lambda_min_ratio < 1.0)) {
    throw Error(ErrorKind::Config, "lasso: lambda_min_ratio must lie in (0, 1)");
  }
  std::vector<double> seq(static_cast<std::size_t>(opts.n_lambda));
  const double step = std::log(opts.lambda_min_ratio) / (opts.n_lambda - 1);
  for (int k = 0; k < opts.n_lambda; ++k) seq[static_cast<std::size_t>(k)] = lambda_max * std::exp(step * k);
  return seq;
}

double lambda_max_standardized(const Standardized& s, const Vector& y) {
  const double ybar = y.mean();
  const Vector g = s.z.transpose() * (y.array() - ybar).matrix() / static_cast<double>(y.size());
  return g.cwiseAbs().maxCoeff();
}

// Warm-started path over `lambdas`; with early stopping it may end before the
// last value. Returns standardized-scale solutions.
std::vector<Vector> run_path(const Standardized& s, const Vector& y, const std::vector<double>& lambdas,
                             const LassoOptions& opts) {
  const Index p = s.z.cols();
  Vector beta = Vector::Zero(p + 1);
  beta[0] = logit(y.mean());
  const double null_dev = 2.0 * static_cast<double>(y.size()) *
                          (log1pexp(beta[0]) - y.mean() * beta[0]);
  std::vector<Vector> out;
  out.reserve(lambdas.size());
  double prev_dev = null_dev;
  Vector eta;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    solve_penalized(s.z, y, s.sd, lambdas[k], beta, opts.tol, opts.max_outer);
    out.push_back(beta);
    if (!opts.early_stop || k == 0) {
      prev_dev = 2.0 * objective(s.z, y, beta, 0.0, eta) * static_cast<double>(y.size());
      continue;
    }
    const double dev = 2.0 * objective(s.z, y, beta, 0.0, eta) * static_cast<double>(y.size());
    const bool small_gain = (prev_dev - dev) < 1e-5 * null_dev;
    const bool saturated = dev < 1e-3 * null_dev;
    prev_dev = dev;
    if (k >= 4 && (small_gain || saturated)) break;
  }
  return out;
}

}  // namespace

std::vector<int> stratified_folds(const Vector& y, int k, Rng& rng) {
  if (k < 2) throw Error(ErrorKind::Config, "folds: need at least 2 folds");
  if (y.size() < k) throw Error(ErrorKind::DegenerateFit, "folds: fewer rows than folds");
  std::vector<int> labels(static_cast<std::size_t>(y.size()));
  std::vector<Index> cls0;
  std::vector<Index> cls1;
  for (Index i = 0; i < y.size(); ++i) (y[i] == 1.0 ? cls1 : cls0).push_back(i);
  std::shuffle(cls0.begin(), cls0.end(), rng);
  std::shuffle(cls1.begin(), cls1.end(), rng);
  int next = 0;
  for (const auto* cls : {&cls1, &cls0}) {
    for (Index i : *cls) {
      labels[static_cast<std::size_t>(i)] = next;
      next = (next + 1) % k;
    }
  }
  return labels;
}

double lasso_lambda_max(const Matrix& x, const Vector& y) {
  check_inputs(x, y);
  return lambda_max_standardized(standardize(x), y);
}

FittedModel fit_lasso(const Matrix& x, const Vector& y, double lambda, const LassoOptions& opts) {
  check_inputs(x, y);
  if (!(lambda >= 0.0)) throw Error(ErrorKind::Domain, "lasso: lambda must be non-negative");
  const Standardized s = standardize(x);
  Vector beta = Vector::Zero(x.cols() + 1);
  beta[0] = logit(y.mean());
  const SolveResult res = solve_penalized(s.z, y, s.sd, lambda, beta, opts.final_tol, opts.max_outer * 5);
  FittedModel m;
  m.family = ModelFamily::Lasso;
  m.lambda = lambda;
  to_original_scale(s, beta, m.intercept, m.coef);
  m.selected.resize(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) m.selected[static_cast<std::size_t>(j)] = m.coef[j] != 0.0;
  m.converged = res.converged;
  m.iterations = res.iterations;
  m.score_max_abs = res.kkt;
  m.deviance = binomial_deviance(x, y, m.intercept, m.coef);
  m.separation = x.cols() > 0 && m.coef.cwiseAbs().maxCoeff() > 20.0;
  return m;
}

std::vector<LassoPathPoint> lasso_path(const Matrix& x, const Vector& y, const LassoOptions& opts) {
  check_inputs(x, y);
  const Standardized s = standardize(x);
  const auto lambdas = lambda_sequence(lambda_max_standardized(s, y), opts);
  const auto sols = run_path(s, y, lambdas, opts);
  std::vector<LassoPathPoint> out;
  for (std::size_t k = 0; k < sols.size(); ++k) {
    LassoPathPoint pt;
    pt.lambda = lambdas[k];
    to_original_scale(s, sols[k], pt.intercept, pt.coef);
    pt.deviance = binomial_deviance(x, y, pt.intercept, pt.coef);
    out.push_back(std::move(pt));
  }
  return out;
}

FittedModel fit_lasso_cv(const Matrix& x, const Vector& y, Rng& rng, const LassoOptions& opts) {
  check_inputs(x, y);
  return fit_lasso_cv(x, y, stratified_folds(y, opts.folds, rng), opts);
}

FittedModel fit_lasso_cv(const Matrix& x, const Vector& y, const std::vector<int>& folds,
                         const LassoOptions& opts) {
  check_inputs(x, y);
  if (static_cast<Index>(folds.size()) != x.rows()) {
    throw Error(ErrorKind::Shape, "lasso: fold labels do not match rows");
  }
  const int k = *std::max_element(folds.begin(), folds.end()) + 1;
  const Standardized full = standardize(x);
  const auto lambdas = lambda_sequence(lambda_max_standardized(full, y), opts);
  const auto full_path = run_path(full, y, lambdas, opts);
  const std::size_t n_path = full_path.size();

  // Held-out deviance summed over all rows for each lambda.
  std::vector<double> cv_dev(n_path, 0.0);
  for (int f = 0; f < k; ++f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (Index i = 0; i < x.rows(); ++i) (folds[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    if (test.empty()) continue;
    Matrix xt(static_cast<Index>(train.size()), x.cols());
    Vector yt(static_cast<Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      xt.row(static_cast<Index>(r)) = x.row(train[r]);
      yt[static_cast<Index>(r)] = y[train[r]];
    }
    check_inputs(xt, yt);
    const Standardized s = standardize(xt);
    const std::vector<double> fold_lambdas(lambdas.begin(), lambdas.begin() + static_cast<std::ptrdiff_t>(n_path));
    const auto sols = run_path(s, yt, fold_lambdas, opts);
    for (std::size_t l = 0; l < n_path; ++l) {
      // A fold path that stopped early keeps its last solution.
      const Vector& b = sols[std::min(l, sols.size() - 1)];
      double b0 = 0.0;
      Vector coef;
      to_original_scale(s, b, b0, coef);
      for (Index i : test) {
        const double eta = x.row(i).dot(coef) + b0;
        cv_dev[l] += 2.0 * mean_deviance_term(eta, y[i]);
      }
    }
  }
  const std::size_t best = static_cast<std::size_t>(
      std::min_element(cv_dev.begin(), cv_dev.end()) - cv_dev.begin());

  Vector beta = full_path[best];
  const SolveResult res =
      solve_penalized(full.z, y, full.sd, lambdas[best], beta, opts.final_tol, opts.max_outer * 5);
  FittedModel m;
  m.family = ModelFamily::Lasso;
  m.lambda = lambdas[best];
  to_original_scale(full, beta, m.intercept, m.coef);
  m.selected.resize(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) m.selected[static_cast<std::size_t>(j)] = m.coef[j] != 0.0;
  m.converged = res.converged;
  m.iterations = res.iterations;
  m.score_max_abs = res.kkt;
  m.deviance = binomial_deviance(x, y, m.intercept, m.coef);
  m.separation = x.cols() > 0 && m.coef.cwiseAbs().maxCoeff() > 20.0;
  return m;
}

}  // namespace mdsize
