#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdsize/amputation.hpp"
#include "mdsize/datagen.hpp"
#include "mdsize/imputation.hpp"
#include "mdsize/metrics.hpp"
#include "mdsize/modeling.hpp"
#include "mdsize/sizing.hpp"

namespace mdsize {

enum class EvalMode { Ideal, Pragmatic };
enum class PoolingMode { Coefficients, Predictions };
enum class TargetPopulationMode { PerRepeat, Shared };

const char* to_string(EvalMode m);
const char* to_string(PoolingMode m);
const char* to_string(TargetPopulationMode m);

/// Development data used without any missingness; the benchmark every
/// missing-data strategy is compared against.
inline constexpr const char* kFullyObserved = "fully-observed";
/// Rows for the generating model itself.
inline constexpr const char* kReferenceMethod = "reference";
inline constexpr const char* kReferenceFamily = "true";

struct ScenarioConfig {
  std::string id = "scenario";
  PredictorSpec pred;
  OutcomeSpec out;
  Index n_target = 500'000;
  SizingInputs sizing;
  std::optional<std::int64_t> n_min_override;
  std::vector<double> deltas{1.0, 1.25, 1.5, 1.75, 2.0};
  MissingnessSpec miss_dev;
  std::optional<MissingnessSpec> miss_target;  // empty: deployment data fully observed
  std::vector<std::string> methods{kFullyObserved, "complete-case", "mean", "single-regression",
                                   "random-forest", "mice"};
  std::vector<ModelFamily> families{ModelFamily::Mle, ModelFamily::AicBackward, ModelFamily::Lasso};
  int repeats = 100;
  std::uint64_t base_seed = 20240101;
  std::vector<EvalMode> eval_modes{EvalMode::Ideal};
  TargetPopulationMode target_population = TargetPopulationMode::PerRepeat;
  PoolingMode pooling = PoolingMode::Coefficients;
  bool target_mice_use_outcome = true;
  std::pair<double, double> slope_band{0.9, 1.1};
  std::vector<double> thresholds = default_thresholds();
  ImputationOptions imputation;
  LassoOptions lasso;

  void validate() const;
};

/// Canonical text of the fields that determine the simulated complete data.
/// Scenarios that differ only in missingness, methods or families share it,
/// so they see the same populations and development samples.
std::string data_key(const ScenarioConfig& cfg);
/// Canonical text of everything that affects results.
std::string scenario_key(const ScenarioConfig& cfg);

/// Per-scenario quantities fixed before any repeat runs.
struct PreparedScenario {
  double beta0 = 0.0;
  SizingResult sizing;
  std::int64_t n_min = 0;
  std::vector<std::int64_t> n_dev;  // aligned with cfg.deltas
  std::uint64_t data_hash = 0;
  std::uint64_t scenario_hash = 0;
  std::uint64_t miss_dev_hash = 0;
  std::uint64_t miss_target_hash = 0;
  AmputationPlan plan_dev;
  std::optional<AmputationPlan> plan_target;
};

PreparedScenario prepare_scenario(const ScenarioConfig& cfg);

/// Scalar metrics recorded for every (method, family, mode) triple.
enum Metric : int {
  kSlope,
  kIntercept,
  kOeRatio,
  kCStatistic,
  kDegSlope,
  kDegIntercept,
  kDegOeRatio,
  kDegCStatistic,
  kNFit,
  kMetricCount
};
const std::array<const char*, kMetricCount>& metric_names();

struct CellRecord {
  std::string method;
  std::string family;
  EvalMode mode = EvalMode::Ideal;
  bool failed = false;
  std::string failure;             // "stage: cause" when failed
  std::vector<std::string> flags;  // nonconverged, separation, slope-undefined
  std::array<double, kMetricCount> metrics{};
  // Net benefit per threshold; empty when failed.
  std::vector<double> nb_model;
  std::vector<double> nb_reference;
  std::vector<double> nb_treat_all;

  std::string flag_text() const;
};

struct RepeatResult {
  std::string scenario_id;
  double delta = 1.0;
  std::int64_t n_dev = 0;
  int repeat = 0;
  std::vector<CellRecord> records;
};

RepeatResult run_repeat(const ScenarioConfig& cfg, const PreparedScenario& prep,
                        std::size_t delta_index, int repeat);

struct Quantiles {
  double p2_5 = 0.0;
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
  double p97_5 = 0.0;
};

/// Type-7 (linear interpolation) sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double prob);

struct CellSummary {
  std::string scenario_id;
  double delta = 1.0;
  std::int64_t n_dev = 0;
  std::string method;
  std::string family;
  EvalMode mode = EvalMode::Ideal;
  int attempted = 0;
  int succeeded = 0;
  double failure_rate = 0.0;
  bool absent = false;  // fewer than two successful repeats
  std::array<std::optional<Quantiles>, kMetricCount> quantiles;
  double assurance = 0.0;
  std::vector<double> thresholds;
  std::vector<double> evpi;
  std::vector<double> nb_reference;
  std::vector<double> nb_model;
  std::vector<double> nb_treat_all;
};

/// Summaries for every triple in one (scenario, delta) cell.
std::vector<CellSummary> summarize(const std::vector<RepeatResult>& repeats,
                                   std::pair<double, double> slope_band,
                                   const std::vector<double>& thresholds);

struct RunOptions {
  int workers = 1;
  std::function<void(const std::string&)> progress;
};

/// Per-repeat scalar records with the net-benefit curves dropped.
struct RunResults {
  std::vector<RepeatResult> repeats;
  std::vector<CellSummary> summaries;
  std::vector<PreparedScenario> prepared;  // aligned with the input scenarios
};

/// Runs every (scenario, delta) cell. Repeats are distributed over workers
/// and collected by index, so output does not depend on the worker count.
RunResults run_scenarios(const std::vector<ScenarioConfig>& scenarios, const RunOptions& opts);

struct SearchTargets {
  std::optional<double> median_slope_min;
  std::optional<double> assurance_min;
  std::optional<double> max_evpi;
  std::vector<double> evpi_thresholds{0.1, 0.2, 0.3};
  // Assurance must come within this distance of the fully observed
  // assurance at the largest delta.
  std::optional<double> assurance_margin_vs_fully_observed;

  bool any() const {
    return median_slope_min || assurance_min || max_evpi || assurance_margin_vs_fully_observed;
  }
};

struct SearchResult {
  std::string scenario_id;
  std::string method;
  std::string family;
  EvalMode mode = EvalMode::Ideal;
  bool achieved = false;
  double delta = 0.0;  // recommended, or closest cell when not achieved
  std::int64_t n_dev = 0;
  double median_slope = 0.0;
  double assurance = 0.0;
  double max_evpi = 0.0;
};

/// Smallest development size whose summary meets every target, per triple.
std::vector<SearchResult> search_min_n(const std::vector<CellSummary>& summaries,
                                       const SearchTargets& targets);

}  // namespace mdsize
