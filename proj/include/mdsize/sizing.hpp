#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mdsize/common.hpp"

namespace mdsize {

struct SizingInputs {
  int p_params = 10;
  double phi = 0.2;
  double shrinkage = 0.9;
  std::optional<double> r2_nagelkerke;
  std::optional<double> c_statistic;
  double delta_opt = 0.05;
  double intercept_margin = 0.05;
  // Cox-Snell R^2 is rounded to this many decimals before the criteria are
  // evaluated (negative disables rounding).
  int r2_cs_digits = 3;

  void validate() const;
};

struct SizingResult {
  double r2_cs = 0.0;
  double r2_cs_max = 0.0;
  std::int64_t n_criterion1 = 0;
  std::int64_t n_criterion2 = 0;
  std::int64_t n_criterion3 = 0;
  std::int64_t n_min = 0;
  double shrinkage_criterion2 = 0.0;
  double epp = 0.0;
  int binding_criterion = 1;
};

struct CoxSnell {
  double r2_cs;
  double r2_cs_max;
};

/// Maximum attainable Cox-Snell R^2 for an outcome with prevalence phi.
double cs_rsq_max(double phi);

CoxSnell cs_rsq_from_nagelkerke(double r2_nagelkerke, double phi);

/// Cox-Snell R^2 implied by a C-statistic, assuming a normally distributed
/// linear predictor. Uses a fixed internal seed so results are reproducible.
double cs_rsq_from_cstat(double c, double phi, std::uint64_t seed = 20240613,
                         Index sample_size = 1'000'000);

/// The three closed-form criteria for binary-outcome model development.
SizingResult closed_form_min_n(const SizingInputs& in);

/// ceil(delta * n_min) per multiplier, deduplicated and ascending.
std::vector<std::int64_t> delta_grid(std::int64_t n_min, const std::vector<double>& deltas);

/// ceil(n / (1 - pi_miss)).
std::int64_t inflate_for_missingness(std::int64_t n, double pi_miss);

}  // namespace mdsize
