#include <catch_amalgamated.hpp>

#include <cmath>

#include "mdsize/modeling.hpp"
#include "mdsize/serialize.hpp"
#include "support.hpp"

using namespace mdsize;
using namespace mdsize::testing;
using Catch::Approx;

namespace {

double deviance(const Matrix& x, const Vector& y, double b0, const Vector& b) {
  const Vector eta = (x * b).array() + b0;
  double d = 0.0;
  for (Index i = 0; i < x.rows(); ++i) d += log1pexp(eta[i]) - y[i] * eta[i];
  return 2.0 * d;
}

// Gradient of the log-likelihood, intercept first.
Vector score(const Matrix& x, const Vector& y, const FittedModel& m) {
  const Vector eta = (x * m.coef).array() + m.intercept;
  Vector r(x.rows());
  for (Index i = 0; i < x.rows(); ++i) r[i] = y[i] - expit(eta[i]);
  Vector g(x.cols() + 1);
  g[0] = r.sum();
  g.tail(x.cols()) = x.transpose() * r;
  return g;
}

struct Standardized {
  Matrix x;
  Vector sd;
};

Standardized standardize(const Matrix& x) {
  Standardized s{x, Vector(x.cols())};
  for (Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mean).square().mean());
    s.sd[j] = sd;
    s.x.col(j) = (x.col(j).array() - mean) / sd;
  }
  return s;
}

// Largest KKT violation of the penalized problem on the standardized scale.
double kkt_violation(const Matrix& x, const Vector& y, const FittedModel& m) {
  const auto s = standardize(x);
  const Vector p = predict(m, x);
  const Vector grad = s.x.transpose() * (y - p) / static_cast<double>(x.rows());
  double worst = std::abs((y - p).mean());
  for (Index j = 0; j < x.cols(); ++j) {
    if (m.coef[j] == 0.0) {
      worst = std::max(worst, std::abs(grad[j]) - m.lambda);
    } else {
      worst = std::max(worst, std::abs(grad[j] - m.lambda * (m.coef[j] > 0 ? 1.0 : -1.0)));
    }
  }
  return worst;
}

struct Sample {
  Matrix x;
  Vector y;
};

Sample scenario_sample(Index n, std::uint64_t seed) {
  const auto spec = pairs_spec(0.5);
  static const OutcomeSpec out = calibrated_outcome(spec);
  Rng rng = make_rng(seed);
  const DataSet d = generate_population(spec, out, n, rng);
  return {d.x, d.y};
}

}  // namespace

TEST_CASE("null model recovers zero effects", "[modeling]") {
  Rng rng = make_rng(1);
  const Matrix x = normal_matrix(100'000, 5, rng);
  std::bernoulli_distribution coin(0.5);
  Vector y(x.rows());
  for (Index i = 0; i < y.size(); ++i) y[i] = coin(rng) ? 1.0 : 0.0;
  const auto m = fit_logistic_mle(x, y);
  CHECK(m.converged);
  CHECK(std::abs(m.intercept) < 0.03);
  CHECK(m.coef.cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("separation is flagged", "[modeling]") {
  Matrix x(20, 1);
  Vector y(20);
  for (Index i = 0; i < 20; ++i) {
    x(i, 0) = static_cast<double>(i) - 9.5;
    y[i] = i >= 10 ? 1.0 : 0.0;
  }
  const auto m = fit_logistic_mle(x, y);
  CHECK(m.separation);
  CHECK_FALSE(m.converged);
}

TEST_CASE("maximum likelihood recovers the generating coefficients", "[modeling]") {
  const auto s = scenario_sample(100'000, 2);
  const auto m = fit_logistic_mle(s.x, s.y);
  CHECK(m.converged);
  CHECK((m.coef - beta_vector(default_beta())).cwiseAbs().maxCoeff() < 0.05);
  CHECK(score(s.x, s.y, m).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(m.score_max_abs < 1e-6);
}

TEST_CASE("maximum likelihood is a local optimum", "[modeling][property]") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const auto s = scenario_sample(1000, seed);
    const auto m = fit_logistic_mle(s.x, s.y);
    const double base = deviance(s.x, s.y, m.intercept, m.coef);
    CHECK(m.deviance == Approx(base).epsilon(1e-10));
    for (Index j = -1; j < s.x.cols(); ++j) {
      for (double h : {-1e-3, 1e-3}) {
        double b0 = m.intercept;
        Vector b = m.coef;
        (j < 0 ? b0 : b[j]) += h;
        CHECK(deviance(s.x, s.y, b0, b) >= base);
      }
    }
  }
}

TEST_CASE("fit input checks", "[modeling]") {
  Matrix x = Matrix::Ones(10, 2);
  Vector y(10);
  y << 0, 1, 0, 1, 0, 1, 0, 1, 0, 1;
  x.col(1) = Vector::LinSpaced(10, 0, 1);
  Matrix dup(10, 3);
  dup << x, x.col(1);
  CHECK_THROWS_AS(fit_logistic_mle(dup, y), Error);
  CHECK_THROWS_AS(fit_logistic_mle(x, Vector::Zero(10)), Error);
  Vector bad = y;
  bad[0] = 2.0;
  CHECK_THROWS_AS(fit_logistic_mle(x, bad), Error);
  CHECK_THROWS_AS(fit_logistic_mle(x, Vector::Ones(9)), Error);
  try {
    fit_logistic_mle(dup, y);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RankDeficient);
  }
}

TEST_CASE("backward AIC keeps strong predictors", "[modeling]") {
  Rng rng = make_rng(3);
  const Matrix x = normal_matrix(10'000, 3, rng);
  Vector beta(3);
  beta << 1.0, 0.0, 0.0;
  const Vector y = draw_outcomes(x, -1.0, beta, rng);
  const auto m = fit_backward_aic(x, y);
  CHECK(m.selected[0]);
  CHECK(m.coef[0] == Approx(1.0).margin(0.1));

  const auto s = scenario_sample(100'000, 4);
  const auto all = fit_backward_aic(s.x, s.y);
  for (bool sel : all.selected) CHECK(sel);
}

TEST_CASE("backward AIC keeps a noise predictor at the chi-square rate", "[modeling]") {
  int kept = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_rng(derive_seed({99, static_cast<std::uint64_t>(r)}));
    const Matrix x = normal_matrix(2000, 2, rng);
    Vector beta(2);
    beta << 0.8, 0.0;
    const Vector y = draw_outcomes(x, -0.5, beta, rng);
    const auto m = fit_backward_aic(x, y);
    if (m.selected[1]) ++kept;
  }
  CHECK(static_cast<double>(kept) / reps == Approx(0.157).margin(0.04));
}

TEST_CASE("AIC path decreases across accepted drops", "[modeling][property]") {
  Rng rng = make_rng(5);
  const Matrix x = normal_matrix(800, 8, rng);
  Vector beta = Vector::Zero(8);
  beta[0] = 0.7;
  beta[3] = -0.4;
  const Vector y = draw_outcomes(x, -1.0, beta, rng);
  const auto m = fit_backward_aic(x, y);
  REQUIRE(m.aic_path.size() >= 2);
  for (std::size_t i = 1; i < m.aic_path.size(); ++i) CHECK(m.aic_path[i] < m.aic_path[i - 1]);
  const double k = static_cast<double>(std::count(m.selected.begin(), m.selected.end(), true));
  CHECK(m.aic_path.back() == Approx(m.deviance + 2.0 * (k + 1.0)));
}

TEST_CASE("lasso at lambda max is the null model", "[modeling][lasso]") {
  const auto s = scenario_sample(2000, 6);
  const double lmax = lasso_lambda_max(s.x, s.y);
  const auto st = standardize(s.x);
  const Vector r = s.y.array() - s.y.mean();
  const double oracle = (st.x.transpose() * r).cwiseAbs().maxCoeff() / static_cast<double>(s.x.rows());
  CHECK(lmax == Approx(oracle).epsilon(1e-12));
  const auto m = fit_lasso(s.x, s.y, lmax);
  CHECK(m.coef.cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.intercept == Approx(logit(s.y.mean())).margin(1e-8));
}

TEST_CASE("lasso with a vanishing penalty matches IRLS", "[modeling][lasso]") {
  const auto s = scenario_sample(10'000, 7);
  const auto lasso = fit_lasso(s.x, s.y, 1e-8);
  const auto mle = fit_logistic_mle(s.x, s.y);
  CHECK(std::abs(lasso.intercept - mle.intercept) < 1e-3);
  CHECK((lasso.coef - mle.coef).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("cross-validated lasso satisfies the KKT conditions", "[modeling][lasso]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = scenario_sample(900, 100 + seed);
    Rng rng = make_rng(seed);
    const auto m = fit_lasso_cv(s.x, s.y, rng);
    CHECK(m.lambda > 0.0);
    CHECK(kkt_violation(s.x, s.y, m) <= 1e-6);
    CHECK(m.score_max_abs <= 1e-6);
  }
}

TEST_CASE("lasso path is continuous in lambda", "[modeling][lasso][property]") {
  const auto s = scenario_sample(1500, 8);
  const auto path = lasso_path(s.x, s.y);
  REQUIRE(path.size() >= 10);
  for (std::size_t k = 1; k < path.size(); ++k) {
    CHECK(path[k].lambda < path[k - 1].lambda);
    CHECK((path[k].coef - path[k - 1].coef).cwiseAbs().maxCoeff() < 0.1);
    CHECK(path[k].deviance <= path[k - 1].deviance + 1e-6);
  }
}

TEST_CASE("stratified folds balance the outcome", "[modeling][lasso]") {
  Vector y = Vector::Zero(103);
  for (Index i = 0; i < 23; ++i) y[i * 4] = 1.0;
  Rng rng = make_rng(9);
  const auto folds = stratified_folds(y, 10, rng);
  std::vector<int> events(10, 0);
  std::vector<int> sizes(10, 0);
  for (Index i = 0; i < y.size(); ++i) {
    ++sizes[static_cast<std::size_t>(folds[static_cast<std::size_t>(i)])];
    if (y[i] == 1.0) ++events[static_cast<std::size_t>(folds[static_cast<std::size_t>(i)])];
  }
  CHECK(*std::max_element(events.begin(), events.end()) - *std::min_element(events.begin(), events.end()) <= 1);
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 2);
}

TEST_CASE("pooling", "[modeling]") {
  FittedModel a;
  a.intercept = -1.0;
  a.coef = Vector::Constant(1, 0.2);
  a.selected = {true};
  a.converged = true;
  FittedModel b = a;
  b.intercept = -2.0;
  b.coef[0] = 0.4;
  const FittedModel one = pool_models(std::span<const FittedModel>(&a, 1));
  CHECK(one.intercept == a.intercept);
  CHECK(one.coef == a.coef);
  const std::vector<FittedModel> two{a, b};
  const auto pooled = pool_models(two);
  CHECK(pooled.coef[0] == Approx(0.3));
  CHECK(pooled.intercept == Approx(-1.5));
  FittedModel c = a;
  c.family = ModelFamily::Lasso;
  CHECK_THROWS_AS(pool_models(std::vector<FittedModel>{a, c}), Error);
}

TEST_CASE("AIC pooling refits the majority selection", "[modeling]") {
  Rng rng = make_rng(10);
  std::vector<DataSet> completions;
  std::vector<FittedModel> models;
  Vector beta(3);
  beta << 0.8, 0.05, 0.0;
  for (int t = 0; t < 3; ++t) {
    DataSet d;
    d.x = normal_matrix(600, 3, rng);
    d.y = draw_outcomes(d.x, -1.0, beta, rng);
    d.observed = Mask::Constant(600, 3, true);
    models.push_back(fit_backward_aic(d.x, d.y));
    completions.push_back(std::move(d));
  }
  models[0].selected = {true, true, false};
  models[1].selected = {true, false, false};
  models[2].selected = {true, false, true};
  const auto pooled = pool_models(models, completions);
  CHECK(pooled.selected == std::vector<bool>{true, false, false});
  CHECK(pooled.coef[1] == 0.0);
  CHECK(pooled.coef[2] == 0.0);
  CHECK_THROWS_AS(pool_models(models), Error);
}

TEST_CASE("prediction", "[modeling]") {
  FittedModel zero;
  zero.coef = Vector::Zero(3);
  zero.selected.assign(3, true);
  Rng rng = make_rng(11);
  const Matrix x = normal_matrix(50, 3, rng);
  CHECK((predict(zero, x).array() == 0.5).all());
  CHECK_THROWS_AS(predict(zero, Matrix::Zero(5, 4)), Error);

  const auto spec = pairs_spec(0.5);
  const auto out = calibrated_outcome(spec);
  const DataSet d = generate_population(spec, out, 1000, rng);
  FittedModel truth;
  truth.intercept = *out.beta0;
  truth.coef = out.beta;
  truth.selected.assign(10, true);
  CHECK((predict(truth, d.x) - *d.true_prob).cwiseAbs().maxCoeff() < 1e-15);

  FittedModel extreme;
  extreme.coef = Vector::Constant(1, 100.0);
  extreme.selected = {true};
  Matrix grid(5, 1);
  grid << -2, -1, 0, 1, 2;
  const Vector p = predict(extreme, grid);
  CHECK(p[0] == kProbabilityFloor);
  CHECK(p[4] == 1.0 - kProbabilityFloor);
  for (Index i = 1; i < 5; ++i) CHECK(p[i] >= p[i - 1]);
}

TEST_CASE("prediction averaging equals the mean of per-model predictions", "[modeling]") {
  Rng rng = make_rng(12);
  std::vector<FittedModel> models;
  std::vector<Matrix> xs;
  for (int t = 0; t < 3; ++t) {
    FittedModel m;
    m.intercept = 0.1 * t - 1.0;
    m.coef = Vector::Constant(2, 0.3 * (t + 1));
    m.selected = {true, true};
    models.push_back(m);
    xs.push_back(normal_matrix(10, 2, rng));
  }
  std::vector<const Matrix*> ptrs{&xs[0], &xs[1], &xs[2]};
  const Vector avg = predict_averaged(models, ptrs);
  Vector manual = Vector::Zero(10);
  for (int t = 0; t < 3; ++t) manual += predict(models[static_cast<std::size_t>(t)], xs[static_cast<std::size_t>(t)]);
  manual /= 3.0;
  CHECK((avg - manual).cwiseAbs().maxCoeff() < 1e-15);
  std::vector<const Matrix*> shared{&xs[0]};
  CHECK(predict_averaged(models, shared).size() == 10);
}

TEST_CASE("model artifacts round trip", "[modeling]") {
  const auto s = scenario_sample(700, 13);
  Rng rng = make_rng(14);
  for (const FittedModel& m : {fit_logistic_mle(s.x, s.y), fit_backward_aic(s.x, s.y), fit_lasso_cv(s.x, s.y, rng)}) {
    const FittedModel r = model_from_json(model_to_json(m));
    CHECK(r.family == m.family);
    CHECK(r.intercept == m.intercept);
    CHECK(r.coef == m.coef);
    CHECK(r.lambda == m.lambda);
    CHECK(predict(r, s.x) == predict(m, s.x));
  }
  CHECK_THROWS_AS(model_from_json("{\"kind\":\"fitted-model\",\"version\":99}"), Error);
  CHECK(model_family_from_string("aic-backward") == ModelFamily::AicBackward);
  CHECK_THROWS_AS(model_family_from_string("ridge"), Error);
}
