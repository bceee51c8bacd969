#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mdsize/datagen.hpp"
#include "mdsize/metrics.hpp"
#include "mdsize/sizing.hpp"

using namespace mdsize;
using Catch::Approx;

namespace {

SizingInputs base_inputs() {
  SizingInputs in;
  in.p_params = 10;
  in.phi = 0.2;
  in.shrinkage = 0.9;
  in.r2_nagelkerke = 0.15;
  return in;
}

}  // namespace

TEST_CASE("Cox-Snell conversion from Nagelkerke", "[sizing]") {
  const auto r = cs_rsq_from_nagelkerke(0.15, 0.2);
  CHECK(r.r2_cs_max == Approx(0.63241).margin(1e-5));
  CHECK(r.r2_cs == Approx(0.09486).margin(1e-5));
  CHECK(cs_rsq_from_nagelkerke(0.0, 0.3).r2_cs == 0.0);
  const auto full = cs_rsq_from_nagelkerke(1.0, 0.5);
  CHECK(full.r2_cs == Approx(0.75).margin(1e-12));
  CHECK(full.r2_cs_max == Approx(0.75).margin(1e-12));
  CHECK_THROWS_AS(cs_rsq_from_nagelkerke(1.2, 0.2), Error);
  CHECK_THROWS_AS(cs_rsq_max(0.0), Error);
}

TEST_CASE("closed-form criteria for the worked scenario", "[sizing]") {
  const auto r = closed_form_min_n(base_inputs());
  CHECK(std::abs(r.n_min - 897) <= 1);
  CHECK(r.binding_criterion == 1);
  CHECK(r.n_criterion3 == 246);
  CHECK(std::abs(r.n_criterion2 - 296) <= 1);
  CHECK(r.shrinkage_criterion2 == Approx(0.75).margin(1e-3));
  CHECK(r.epp == Approx(0.2 * static_cast<double>(r.n_min) / 10.0));
  CHECK(r.n_min == std::max({r.n_criterion1, r.n_criterion2, r.n_criterion3}));
}

TEST_CASE("minimum size is monotone in its inputs", "[sizing]") {
  auto in = base_inputs();
  std::int64_t prev = 0;
  for (int p = 2; p <= 30; p += 4) {
    in.p_params = p;
    const auto n = closed_form_min_n(in).n_min;
    CHECK(n >= prev);
    CHECK(n > 0);
    prev = n;
  }
  in = base_inputs();
  prev = std::numeric_limits<std::int64_t>::max();
  for (double r2 : {0.05, 0.1, 0.15, 0.2, 0.3, 0.4}) {
    in.r2_nagelkerke = r2;
    const auto n = closed_form_min_n(in).n_min;
    CHECK(n <= prev);
    prev = n;
  }
  in = base_inputs();
  prev = std::numeric_limits<std::int64_t>::max();
  for (double s : {0.95, 0.9, 0.85, 0.8, 0.7}) {
    in.shrinkage = s;
    const auto n = closed_form_min_n(in).n_min;
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("sizing input validation", "[sizing]") {
  auto in = base_inputs();
  in.c_statistic = 0.75;
  CHECK_THROWS_AS(closed_form_min_n(in), Error);
  in = base_inputs();
  in.phi = 1.0;
  CHECK_THROWS_AS(closed_form_min_n(in), Error);
}

TEST_CASE("delta grid", "[sizing]") {
  const auto g = delta_grid(897, {1.0, 1.25, 1.5, 1.75, 2.0});
  const std::vector<std::int64_t> expected{897, 1122, 1346, 1570, 1794};
  REQUIRE(g.size() == expected.size());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - expected[i]) <= 1);
  CHECK(delta_grid(100, {1.0}) == std::vector<std::int64_t>{100});
  CHECK(delta_grid(10, {1.0, 2.0, 2.0}) == std::vector<std::int64_t>{10, 20});
}

TEST_CASE("missingness inflation", "[sizing]") {
  CHECK(inflate_for_missingness(897, 0.0) == 897);
  CHECK(inflate_for_missingness(897, 0.4) == 1495);
  CHECK(inflate_for_missingness(2836, 0.2) == 3545);
  CHECK_THROWS_AS(inflate_for_missingness(897, 1.0), Error);
}

TEST_CASE("Cox-Snell from a C-statistic", "[sizing]") {
  CHECK(cs_rsq_from_cstat(0.501, 0.2, 7, 200'000) < 1e-3);
  double prev = -1.0;
  for (int i = 0; i < 10; ++i) {
    const double c = 0.55 + 0.04 * i;
    const double r2 = cs_rsq_from_cstat(c, 0.2, 11, 100'000);
    CHECK(r2 > prev);
    prev = r2;
  }
  CHECK(cs_rsq_from_cstat(0.6, 0.2) < cs_rsq_from_cstat(0.8, 0.2));
}

TEST_CASE("C-statistic round trip through a simulated model", "[sizing]") {
  // Find the normal linear predictor whose expected Cox-Snell R^2 matches the
  // Nagelkerke target, simulate outcomes, measure C and convert back.
  const double phi = 0.2;
  const double target = cs_rsq_from_nagelkerke(0.15, phi).r2_cs;
  const Index n = 400'000;
  Rng rng = make_rng(99);
  std::normal_distribution<double> normal;
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal(rng);

  auto r2_at = [&](double sigma, double& mu) {
    mu = solve_intercept(sigma * z, phi, 1e-10);
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double eta = mu + sigma * z[i];
      const double p = expit(eta);
      ll += p * eta - log1pexp(eta);
    }
    const double ll0 = n * (phi * std::log(phi) + (1 - phi) * std::log(1 - phi));
    return 1.0 - std::exp(2.0 * (ll0 - ll) / static_cast<double>(n));
  };
  double lo = 0.0;
  double hi = 3.0;
  double mu = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (r2_at(mid, mu) < target ? lo : hi) = mid;
  }
  const double sigma = 0.5 * (lo + hi);
  r2_at(sigma, mu);

  std::uniform_real_distribution<double> unif;
  Vector y(n);
  Vector p(n);
  for (Index i = 0; i < n; ++i) {
    p[i] = expit(mu + sigma * z[i]);
    y[i] = unif(rng) < p[i] ? 1.0 : 0.0;
  }
  const double c = c_statistic(y, p);
  const double recovered = cs_rsq_from_cstat(c, phi);
  CHECK(std::abs(recovered - target) / target < 0.05);
}
