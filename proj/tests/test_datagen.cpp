#include <catch_amalgamated.hpp>

#include <cmath>

#include "mdsize/datagen.hpp"
#include "support.hpp"

using namespace mdsize;
using namespace mdsize::testing;
using Catch::Approx;

TEST_CASE("pairwise correlation structure", "[datagen]") {
  Rng rng = make_rng(3);
  const Matrix x0 = sample_predictors(pairs_spec(0.0), 100'000, rng);
  CHECK(std::abs(correlation(x0.col(0), x0.col(1))) < 0.02);

  const auto spec = pairs_spec(0.75);
  const Matrix x = sample_predictors(spec, 100'000, rng);
  CHECK(correlation(x.col(0), x.col(1)) == Approx(0.75).margin(0.02));
  CHECK(std::abs(correlation(x.col(1), x.col(2))) < 0.02);

  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  CHECK((cov - spec.covariance()).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("odd p leaves the last variable unpaired", "[datagen]") {
  const auto spec = pairs_spec(0.5, 5);
  const Matrix sigma = spec.covariance();
  CHECK(sigma(4, 3) == 0.0);
  CHECK(sigma(2, 3) == 0.5);
}

TEST_CASE("invalid correlation is rejected", "[datagen]") {
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(sample_predictors(pairs_spec(1.0), 10, rng), Error);
}

TEST_CASE("intercept calibration", "[datagen]") {
  SECTION("zero betas give the logit of the prevalence") {
    OutcomeSpec out;
    out.beta = Vector::Zero(10);
    out.target_prevalence = 0.2;
    Rng rng = make_rng(5);
    CHECK(calibrate_intercept(pairs_spec(0.5), out, rng, 10'000) == Approx(std::log(0.25)).margin(1e-4));
  }
  SECTION("symmetric linear predictor at prevalence one half") {
    Vector eta(4);
    eta << -2.0, -0.5, 0.5, 2.0;
    CHECK(std::abs(solve_intercept(eta, 0.5)) < 1e-3);
  }
  SECTION("agrees with a 1e7-draw bisection oracle") {
    const auto spec = pairs_spec(0.5);
    OutcomeSpec out;
    out.beta = beta_vector(default_beta());
    Rng rng = make_rng(17);
    const double b0 = calibrate_intercept(spec, out, rng);

    // Independent sampler: x_{2k+1} = rho z1 + sqrt(1 - rho^2) z2.
    const Index n = 10'000'000;
    const double rho = 0.5;
    const double s = std::sqrt(1.0 - rho * rho);
    Rng orng(123456789);
    std::normal_distribution<double> normal;
    std::vector<double> eta(static_cast<std::size_t>(n));
    for (auto& e : eta) {
      e = 0.0;
      for (Index j = 0; j < 10; j += 2) {
        const double z1 = normal(orng);
        const double z2 = normal(orng);
        e += out.beta[j] * z1 + out.beta[j + 1] * (rho * z1 + s * z2);
      }
    }
    double lo = -5.0;
    double hi = 5.0;
    for (int it = 0; it < 35; ++it) {
      const double mid = 0.5 * (lo + hi);
      double m = 0.0;
      for (double e : eta) m += 1.0 / (1.0 + std::exp(-(mid + e)));
      (m / static_cast<double>(n) < 0.2 ? lo : hi) = mid;
    }
    CHECK(b0 == Approx(0.5 * (lo + hi)).margin(0.01));
  }
  SECTION("unreachable prevalence is a domain error") {
    OutcomeSpec out;
    out.beta = Vector::Zero(10);
    out.target_prevalence = 0.0;
    Rng rng = make_rng(5);
    CHECK_THROWS_AS(calibrate_intercept(pairs_spec(0.0), out, rng, 100), Error);
  }
}

TEST_CASE("population prevalence and probabilities", "[datagen]") {
  const auto spec = pairs_spec(0.5);
  const auto out = calibrated_outcome(spec);
  Rng rng = make_rng(21);
  const DataSet d = generate_population(spec, out, 500'000, rng);
  CHECK(d.y.mean() == Approx(0.2).margin(0.005));
  REQUIRE(d.true_prob);
  const Vector eta = (d.x * out.beta).array() + *out.beta0;
  double worst = 0.0;
  for (Index i = 0; i < d.rows(); ++i) worst = std::max(worst, std::abs(logit((*d.true_prob)[i]) - eta[i]));
  CHECK(worst < 1e-9);
  CHECK(d.fully_observed());
}

TEST_CASE("prevalence stays within four standard errors across seeds", "[datagen][property]") {
  const auto spec = pairs_spec(0.5);
  const auto out = calibrated_outcome(spec, 0.2, 2);
  const Index n = 5'000;
  const double bound = 4.0 * std::sqrt(0.2 * 0.8 / n);
  int inside = 0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    Rng rng = make_rng(1000 + s);
    const DataSet d = generate_population(spec, out, n, rng);
    if (std::abs(d.y.mean() - 0.2) <= bound) ++inside;
  }
  CHECK(inside >= static_cast<int>(0.99 * seeds));
}

TEST_CASE("generation is deterministic given the seed", "[datagen]") {
  const auto spec = pairs_spec(0.75);
  const auto out = calibrated_outcome(spec);
  Rng a = make_rng(9);
  Rng b = make_rng(9);
  const DataSet da = generate_population(spec, out, 1000, a);
  const DataSet db = generate_population(spec, out, 1000, b);
  CHECK(da.x == db.x);
  CHECK(da.y == db.y);
}

TEST_CASE("missing intercept is a usage error", "[datagen]") {
  OutcomeSpec out;
  out.beta = Vector::Zero(10);
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(generate_population(pairs_spec(0.0), out, 10, rng), Error);
}

namespace {

PredictorSpec summary_spec() {
  PredictorSpec s;
  s.mode = PredictorMode::IndependentSummaries;
  VariableSummary bmi;
  bmi.name = "bmi";
  bmi.mean = 24.0;
  bmi.variance = 16.0;
  VariableSummary sex;
  sex.name = "sex";
  sex.kind = VariableSummary::Kind::Categorical;
  sex.levels = {"F", "M"};
  sex.proportions = {0.7, 0.3};
  VariableSummary adm;
  adm.name = "admission";
  adm.kind = VariableSummary::Kind::Categorical;
  adm.levels = {"elective", "emergency", "urgent"};
  adm.proportions = {0.5, 0.3, 0.2};
  s.summaries = {bmi, sex, adm};
  return s;
}

}  // namespace

TEST_CASE("sampling from univariate summaries", "[datagen]") {
  const auto spec = summary_spec();
  CHECK(spec.design_width() == 4);
  const auto groups = spec.groups();
  REQUIRE(groups.size() == 3);
  CHECK(groups[2].columns == std::vector<Index>{2, 3});
  CHECK(groups[2].categorical);

  Rng rng = make_rng(4);
  const Matrix x = sample_predictors(spec, 100'000, rng);
  const Vector bmi = x.col(0);
  const double mean = bmi.mean();
  const double var = (bmi.array() - mean).square().sum() / static_cast<double>(bmi.size() - 1);
  CHECK(mean == Approx(24.0).margin(0.05));
  CHECK(var == Approx(16.0).margin(0.3));
  CHECK(x.col(1).mean() == Approx(0.3).margin(0.01));
  CHECK(x.col(2).mean() == Approx(0.3).margin(0.01));
  CHECK(x.col(3).mean() == Approx(0.2).margin(0.01));
  // At most one dummy set per row.
  CHECK((x.col(2) + x.col(3)).maxCoeff() <= 1.0);
}

TEST_CASE("summaries must be coherent", "[datagen]") {
  auto spec = summary_spec();
  spec.summaries[1].proportions = {0.7, 0.4};
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = summary_spec();
  spec.summaries[0].variance = -1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("bundled ICU reference model runs end to end", "[datagen]") {
  const auto cfg = load_config(std::string(MDSIZE_SOURCE_DIR) + "/configs/icu_summaries.json");
  REQUIRE(cfg.scenarios.size() == 1);
  const auto& s = cfg.scenarios.front();
  REQUIRE(s.pred.mode == PredictorMode::IndependentSummaries);
  OutcomeSpec out = s.out;
  Rng cal = make_rng(8);
  out.beta0 = calibrate_intercept(s.pred, out, cal, 200'000);
  Rng rng = make_rng(10);
  const DataSet d = generate_from_summaries(s.pred, out, 200'000, rng);
  CHECK(d.cols() == s.pred.design_width());
  CHECK(d.y.mean() == Approx(out.target_prevalence).margin(4.0 * std::sqrt(0.25 / 200'000.0) + 1e-3));
  CHECK(d.true_prob->mean() == Approx(out.target_prevalence).margin(2e-3));
}
