#pragma once

#include <span>
#include <vector>

#include "mdsize/dataset.hpp"
#include "mdsize/rng.hpp"

namespace mdsize {

enum class Mechanism { MCAR, MAR, MNAR };
enum class PatternSet { SingleVariable, AllSubsets };

const char* to_string(Mechanism m);
const char* to_string(PatternSet p);

/// Missingness assumptions for one dataset (development or deployment).
struct MissingnessSpec {
  Mechanism mechanism = Mechanism::MAR;
  double pi_miss = 0.0;  // proportion of rows with >= 1 missing predictor
  PatternSet pattern_set = PatternSet::SingleVariable;
  // Optional overrides, indexed [pattern][variable]. `patterns` entries are
  // true where the variable is missing.
  std::vector<std::vector<bool>> patterns;
  std::vector<std::vector<double>> weights;
};

/// Patterns and weights are indexed by variable (column group), not by
/// design column.
struct AmputationPlan {
  Mechanism mechanism = Mechanism::MCAR;
  std::vector<std::vector<bool>> patterns;
  std::vector<std::vector<double>> weights;
  std::vector<double> allocation;
};

inline constexpr int kMaxAllSubsetsVariables = 16;

AmputationPlan plan_amputation(const MissingnessSpec& spec, int p);

/// Offset a such that mean(expit(a + z)) = pi over the given scores.
double solve_amputation_offset(std::span<const double> z, double pi);

/// Assigns rows to patterns uniformly, scores each group with a standardized
/// weighted sum and masks the pattern's cells with probability expit(a + z).
DataSet ampute(const DataSet& data, const AmputationPlan& plan, double pi_miss, Rng& rng);

}  // namespace mdsize
