#include <catch_amalgamated.hpp>

#include <cmath>

#include "mdsize/engine.hpp"
#include "support.hpp"

using namespace mdsize;
using namespace mdsize::testing;
using Catch::Approx;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig cfg;
  cfg.id = "small";
  cfg.pred = pairs_spec(0.5);
  cfg.out.beta = beta_vector(default_beta());
  cfg.sizing.r2_nagelkerke = 0.15;
  cfg.n_target = 20'000;
  cfg.miss_dev.mechanism = Mechanism::MAR;
  cfg.miss_dev.pi_miss = 0.4;
  cfg.imputation.mice_m = 5;
  cfg.imputation.forest.n_trees = 20;
  cfg.repeats = 3;
  cfg.deltas = {1.0};
  return cfg;
}

const CellRecord& find(const RepeatResult& rr, const std::string& method, const std::string& family,
                       EvalMode mode = EvalMode::Ideal) {
  for (const auto& r : rr.records) {
    if (r.method == method && r.family == family && r.mode == mode) return r;
  }
  FAIL("record not found: " << method << " " << family);
  throw std::logic_error("unreachable");
}

CellRecord synthetic_record(const std::string& method, double slope, std::size_t nt, double nb_gap) {
  CellRecord r;
  r.method = method;
  r.family = "mle";
  r.metrics.fill(0.0);
  r.metrics[kSlope] = slope;
  r.metrics[kCStatistic] = 0.7;
  r.nb_reference.assign(nt, 0.1);
  r.nb_model.assign(nt, 0.1 - nb_gap);
  r.nb_treat_all.assign(nt, 0.05);
  return r;
}

}  // namespace

TEST_CASE("prepared scenario", "[engine]") {
  const auto cfg = [] {
    auto c = small_scenario();
    c.deltas = {1.0, 1.25, 1.5, 1.75, 2.0};
    return c;
  }();
  const auto prep = prepare_scenario(cfg);
  CHECK(prep.n_min == 897);
  CHECK(prep.n_dev == std::vector<std::int64_t>{897, 1122, 1346, 1570, 1794});
  CHECK(prep.plan_dev.patterns.size() == 10);
  CHECK_FALSE(prep.plan_target);
  CHECK(std::isfinite(prep.beta0));
  CHECK(prep.beta0 < logit(0.2));
}

TEST_CASE("scenario validation", "[engine]") {
  auto cfg = small_scenario();
  cfg.eval_modes = {EvalMode::Ideal, EvalMode::Pragmatic};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_scenario();
  cfg.repeats = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_scenario();
  cfg.methods = {"hot-deck"};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_scenario();
  cfg.deltas = {1.5, 1.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("data key ignores missingness and methods", "[engine]") {
  auto a = small_scenario();
  auto b = a;
  b.miss_dev.pi_miss = 0.6;
  b.methods = {"mice"};
  b.families = {ModelFamily::Lasso};
  CHECK(data_key(a) == data_key(b));
  CHECK(scenario_key(a) != scenario_key(b));
  b.pred.rho = 0.75;
  CHECK(data_key(a) != data_key(b));
}

TEST_CASE("without missingness every method reproduces the fully observed pipeline", "[engine]") {
  auto cfg = small_scenario();
  cfg.miss_dev.pi_miss = 0.0;
  cfg.miss_target = cfg.miss_dev;
  cfg.eval_modes = {EvalMode::Ideal, EvalMode::Pragmatic};
  const auto prep = prepare_scenario(cfg);
  const auto rr = run_repeat(cfg, prep, 0, 0);
  for (const auto& fam : {"mle", "aic-backward", "lasso"}) {
    const auto& base = find(rr, kFullyObserved, fam);
    REQUIRE_FALSE(base.failed);
    for (const auto& method : cfg.methods) {
      for (EvalMode mode : {EvalMode::Ideal, EvalMode::Pragmatic}) {
        if (method == kFullyObserved && mode == EvalMode::Pragmatic) continue;
        const auto& r = find(rr, method, fam, mode);
        INFO(method << " " << fam << " " << to_string(mode));
        REQUIRE_FALSE(r.failed);
        for (int m = 0; m < kMetricCount; ++m) {
          CHECK(r.metrics[static_cast<std::size_t>(m)] == base.metrics[static_cast<std::size_t>(m)]);
        }
        CHECK(r.nb_model == base.nb_model);
      }
    }
  }
}

TEST_CASE("reference record evaluates the generating model", "[engine]") {
  auto cfg = small_scenario();
  cfg.n_target = 500'000;
  cfg.methods = {kFullyObserved};
  cfg.families = {ModelFamily::Mle};
  const auto prep = prepare_scenario(cfg);
  const auto rr = run_repeat(cfg, prep, 0, 0);
  const auto& ref = find(rr, kReferenceMethod, kReferenceFamily);
  CHECK(ref.metrics[kSlope] == Approx(1.0).margin(0.02));
  CHECK(ref.metrics[kOeRatio] == Approx(1.0).margin(0.01));
  CHECK(ref.metrics[kDegSlope] == 0.0);
  CHECK(ref.metrics[kDegCStatistic] == 0.0);
  CHECK(std::isnan(ref.metrics[kNFit]));
  const auto& model = find(rr, kFullyObserved, "mle");
  CHECK(model.metrics[kNFit] == 897.0);
  CHECK(model.metrics[kDegCStatistic] ==
        Approx(ref.metrics[kCStatistic] - model.metrics[kCStatistic]).margin(1e-15));
  REQUIRE(model.nb_model.size() == 99);
  CHECK(model.nb_reference == ref.nb_model);
}

TEST_CASE("every requested triple gets a record", "[engine]") {
  auto cfg = small_scenario();
  cfg.miss_target = cfg.miss_dev;
  cfg.eval_modes = {EvalMode::Ideal, EvalMode::Pragmatic};
  cfg.families = {ModelFamily::Mle, ModelFamily::AicBackward};
  const auto prep = prepare_scenario(cfg);
  const auto rr = run_repeat(cfg, prep, 0, 1);
  // reference x 2 modes, fully observed ideal only, 5 missing-data methods x 2 modes.
  CHECK(rr.records.size() == 2 + 2 * (1 + 5 * 2));
  for (const auto& r : rr.records) {
    INFO(r.method << " " << r.family << " " << r.flag_text());
    CHECK_FALSE(r.failed);
  }
  const auto& cc = find(rr, "complete-case", "mle");
  CHECK(cc.metrics[kNFit] < 897.0 * 0.7);
}

TEST_CASE("stage failures become explicit records", "[engine]") {
  auto cfg = small_scenario();
  cfg.n_min_override = 14;
  cfg.miss_dev.pi_miss = 0.9;
  cfg.methods = {kFullyObserved, "complete-case", "mean"};
  cfg.families = {ModelFamily::Mle};
  const auto prep = prepare_scenario(cfg);
  int failures = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto rr = run_repeat(cfg, prep, 0, rep);
    const auto& cc = find(rr, "complete-case", "mle");
    if (cc.failed) {
      ++failures;
      CHECK(cc.flag_text().rfind("failed:", 0) == 0);
      for (double v : cc.metrics) CHECK(std::isnan(v));
    }
  }
  CHECK(failures > 0);
}

TEST_CASE("type-7 quantiles", "[engine]") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile_sorted(v, 0.5) == 2.5);
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 4.0);
  CHECK(quantile_sorted(v, 0.25) == Approx(1.75));
  CHECK(std::isnan(quantile_sorted({}, 0.5)));
}

TEST_CASE("summaries of identical repeats", "[engine]") {
  std::vector<RepeatResult> reps(4);
  for (int r = 0; r < 4; ++r) {
    reps[static_cast<std::size_t>(r)].scenario_id = "s";
    reps[static_cast<std::size_t>(r)].repeat = r;
    reps[static_cast<std::size_t>(r)].records.push_back(synthetic_record("mean", 0.95, 3, 0.01));
  }
  const auto th = std::vector<double>{0.1, 0.2, 0.3};
  const auto s = summarize(reps, {0.9, 1.1}, th);
  REQUIRE(s.size() == 1);
  CHECK(s[0].quantiles[kSlope]->median == 0.95);
  CHECK(s[0].quantiles[kSlope]->p2_5 == 0.95);
  CHECK(s[0].assurance == 1.0);
  CHECK(s[0].evpi[1] == Approx(0.01));
  CHECK_FALSE(s[0].absent);
  CHECK(summarize(reps, {1.0, 1.1}, th)[0].assurance == 0.0);
}

TEST_CASE("failures are excluded from statistics and counted", "[engine]") {
  const std::vector<double> th{0.1};
  std::vector<RepeatResult> clean(3);
  std::vector<RepeatResult> mixed(5);
  const double slopes[] = {0.85, 0.95, 1.2};
  for (int r = 0; r < 3; ++r) {
    clean[static_cast<std::size_t>(r)].records.push_back(synthetic_record("mice", slopes[r], 1, 0.0));
    mixed[static_cast<std::size_t>(r)].records.push_back(synthetic_record("mice", slopes[r], 1, 0.0));
  }
  for (int r = 3; r < 5; ++r) {
    CellRecord f;
    f.method = "mice";
    f.family = "mle";
    f.failed = true;
    f.failure = "model-fit: boom";
    f.metrics.fill(std::numeric_limits<double>::quiet_NaN());
    mixed[static_cast<std::size_t>(r)].records.push_back(f);
  }
  const auto a = summarize(clean, {0.9, 1.1}, th)[0];
  const auto b = summarize(mixed, {0.9, 1.1}, th)[0];
  CHECK(a.quantiles[kSlope]->median == b.quantiles[kSlope]->median);
  CHECK(a.quantiles[kSlope]->p97_5 == b.quantiles[kSlope]->p97_5);
  CHECK(a.assurance == b.assurance);
  CHECK(b.assurance == Approx(1.0 / 3.0));
  CHECK(b.failure_rate == Approx(0.4));
  CHECK(b.attempted == 5);
  CHECK(b.succeeded == 3);

  std::vector<RepeatResult> mostly_failed(mixed.begin() + 2, mixed.end());
  const auto c = summarize(mostly_failed, {0.9, 1.1}, th)[0];
  CHECK(c.absent);
  CHECK_FALSE(c.quantiles[kSlope]);
}

TEST_CASE("undefined slopes count outside the assurance band", "[engine]") {
  std::vector<RepeatResult> reps(2);
  reps[0].records.push_back(synthetic_record("mean", 1.0, 1, 0.0));
  reps[1].records.push_back(synthetic_record("mean", std::numeric_limits<double>::quiet_NaN(), 1, 0.0));
  const auto s = summarize(reps, {0.9, 1.1}, {0.1})[0];
  CHECK(s.assurance == 0.5);
  CHECK(s.quantiles[kSlope]->median == 1.0);
}

namespace {

CellSummary summary_cell(const std::string& method, double delta, std::int64_t n, double slope, double assurance,
                         double evpi) {
  CellSummary s;
  s.scenario_id = "s";
  s.method = method;
  s.family = "mle";
  s.delta = delta;
  s.n_dev = n;
  s.quantiles[kSlope] = Quantiles{slope, slope, slope, slope, slope};
  s.assurance = assurance;
  s.thresholds = {0.1, 0.2, 0.3};
  s.evpi = {evpi, evpi, evpi};
  return s;
}

}  // namespace

TEST_CASE("grow-N search", "[engine]") {
  std::vector<CellSummary> cells{
      summary_cell(kFullyObserved, 1.0, 100, 0.9, 0.5, 0.002),
      summary_cell(kFullyObserved, 2.0, 200, 0.95, 0.7, 0.001),
      summary_cell("mice", 1.0, 100, 0.86, 0.35, 0.004),
      summary_cell("mice", 1.5, 150, 0.9, 0.55, 0.003),
      summary_cell("mice", 2.0, 200, 0.93, 0.67, 0.002),
  };
  SECTION("immediate satisfaction returns the first grid point") {
    SearchTargets t;
    t.median_slope_min = 0.8;
    const auto r = search_min_n(cells, t);
    for (const auto& x : r) {
      CHECK(x.achieved);
      CHECK(x.n_dev == 100);
    }
  }
  SECTION("assurance margin relative to the fully observed model") {
    SearchTargets t;
    t.assurance_margin_vs_fully_observed = 0.05;
    const auto r = search_min_n(cells, t);
    const auto mice = std::find_if(r.begin(), r.end(), [](const SearchResult& x) { return x.method == "mice"; });
    REQUIRE(mice != r.end());
    CHECK(mice->achieved);
    CHECK(mice->delta == 2.0);
  }
  SECTION("impossible targets report the closest cell") {
    SearchTargets t;
    t.assurance_min = 0.999;
    const auto r = search_min_n(cells, t);
    for (const auto& x : r) {
      CHECK_FALSE(x.achieved);
      CHECK(x.delta == 2.0);
    }
  }
  SECTION("EVPI target") {
    SearchTargets t;
    t.max_evpi = 0.0025;
    const auto r = search_min_n(cells, t);
    const auto mice = std::find_if(r.begin(), r.end(), [](const SearchResult& x) { return x.method == "mice"; });
    CHECK(mice->n_dev == 200);
  }
  SECTION("no targets is an error") {
    CHECK_THROWS_AS(search_min_n(cells, SearchTargets{}), Error);
  }
}

TEST_CASE("results do not depend on the worker count", "[engine]") {
  auto cfg = small_scenario();
  cfg.repeats = 4;
  cfg.deltas = {1.0, 1.5};
  cfg.families = {ModelFamily::Mle, ModelFamily::Lasso};
  cfg.methods = {kFullyObserved, "complete-case", "mice"};
  RunOptions one;
  RunOptions three;
  three.workers = 3;
  const auto a = run_scenarios({cfg}, one);
  const auto b = run_scenarios({cfg}, three);
  REQUIRE(a.repeats.size() == b.repeats.size());
  for (std::size_t i = 0; i < a.repeats.size(); ++i) {
    REQUIRE(a.repeats[i].records.size() == b.repeats[i].records.size());
    for (std::size_t k = 0; k < a.repeats[i].records.size(); ++k) {
      const auto& ra = a.repeats[i].records[k];
      const auto& rb = b.repeats[i].records[k];
      for (int m = 0; m < kMetricCount; ++m) {
        const double va = ra.metrics[static_cast<std::size_t>(m)];
        const double vb = rb.metrics[static_cast<std::size_t>(m)];
        CHECK(((std::isnan(va) && std::isnan(vb)) || va == vb));
      }
    }
  }
  REQUIRE(a.summaries.size() == b.summaries.size());
  for (std::size_t i = 0; i < a.summaries.size(); ++i) CHECK(a.summaries[i].evpi == b.summaries[i].evpi);
  CHECK(a.summaries.size() == 2 * (1 + 3 * 2));
}

TEST_CASE("shared target population mode reuses one population", "[engine]") {
  auto cfg = small_scenario();
  cfg.methods = {kFullyObserved};
  cfg.families = {ModelFamily::Mle};
  cfg.target_population = TargetPopulationMode::Shared;
  const auto prep = prepare_scenario(cfg);
  const auto a = run_repeat(cfg, prep, 0, 0);
  const auto b = run_repeat(cfg, prep, 0, 1);
  CHECK(find(a, kReferenceMethod, kReferenceFamily).metrics[kCStatistic] ==
        find(b, kReferenceMethod, kReferenceFamily).metrics[kCStatistic]);
  cfg.target_population = TargetPopulationMode::PerRepeat;
  const auto c = run_repeat(cfg, prep, 0, 0);
  const auto d = run_repeat(cfg, prep, 0, 1);
  CHECK(find(c, kReferenceMethod, kReferenceFamily).metrics[kCStatistic] !=
        find(d, kReferenceMethod, kReferenceFamily).metrics[kCStatistic]);
}

TEST_CASE("prediction pooling differs from coefficient pooling only for multiple completions", "[engine]") {
  auto cfg = small_scenario();
  cfg.methods = {"mean", "mice"};
  cfg.families = {ModelFamily::Mle};
  const auto prep = prepare_scenario(cfg);
  const auto coef = run_repeat(cfg, prep, 0, 0);
  cfg.pooling = PoolingMode::Predictions;
  const auto pred = run_repeat(cfg, prep, 0, 0);
  CHECK(find(coef, "mean", "mle").metrics[kSlope] == find(pred, "mean", "mle").metrics[kSlope]);
  CHECK(find(coef, "mice", "mle").metrics[kSlope] != find(pred, "mice", "mle").metrics[kSlope]);
}
