#include "mdsize/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mdsize/rng.hpp"

namespace mdsize {

namespace {

std::int64_t ceil_count(double x) {
  // Guard against values such as 100.00000000001 produced by rounding noise.
  return static_cast<std::int64_t>(std::ceil(x - 1e-9));
}

double round_digits(double x, int digits) {
  if (digits < 0) return x;
  const double scale = std::pow(10.0, digits);
  return std::round(x * scale) / scale;
}

std::int64_t shrinkage_criterion(int p, double shrinkage, double r2_cs) {
  if (r2_cs >= shrinkage) {
    std::ostringstream msg;
    msg << "sizing: anticipated Cox-Snell R^2 (" << r2_cs
        << ") must be below the target shrinkage (" << shrinkage << ")";
    throw Error(ErrorKind::Domain, msg.str());
  }
  return ceil_count(p / ((shrinkage - 1.0) * std::log(1.0 - r2_cs / shrinkage)));
}

struct NormalLinearPredictor {
  std::vector<double> z;  // sorted standard normal draws

  // Intercept giving mean(expit(mu + sigma z)) = phi.
  double solve_mean(double sigma, double phi) const {
    double mu = logit(phi);
    for (int iter = 0; iter < 100; ++iter) {
      double s = 0.0;
      double d = 0.0;
      for (double zi : z) {
        const double p = expit(mu + sigma * zi);
        s += p;
        d += p * (1.0 - p);
      }
      const double n = static_cast<double>(z.size());
      const double f = s / n - phi;
      if (std::abs(f) < 1e-12) break;
      double step = f / (d / n);
      step = std::clamp(step, -2.0, 2.0);
      mu -= step;
    }
    return mu;
  }

  // Expected C-statistic and log-likelihoods when outcomes follow the
  // probabilities themselves.
  struct Moments {
    double c;
    double ll_model;
    double ll_null;
  };

  Moments moments(double sigma, double mu) const {
    double cum_non_events = 0.0;
    double concordant = 0.0;
    double s1 = 0.0;
    double s0 = 0.0;
    double self = 0.0;
    double ll = 0.0;
    for (double zi : z) {
      const double eta = mu + sigma * zi;
      const double p = expit(eta);
      concordant += p * cum_non_events;
      cum_non_events += 1.0 - p;
      s1 += p;
      s0 += 1.0 - p;
      self += p * (1.0 - p);
      ll += p * eta - log1pexp(eta);
    }
    const double n = static_cast<double>(z.size());
    const double phi = s1 / n;
    const double ll0 = n * (phi * std::log(phi) + (1.0 - phi) * std::log(1.0 - phi));
    return {concordant / (s1 * s0 - self), ll, ll0};
  }
};

}  // namespace

void SizingInputs::validate() const {
  if (p_params < 1) throw Error(ErrorKind::Config, "sizing: p_params must be >= 1");
  if (!(phi > 0.0 && phi < 1.0)) throw Error(ErrorKind::Config, "sizing: prevalence must lie in (0, 1)");
  if (!(shrinkage > 0.0 && shrinkage < 1.0)) throw Error(ErrorKind::Config, "sizing: target shrinkage must lie in (0, 1)");
  if (r2_nagelkerke.has_value() == c_statistic.has_value()) {
    throw Error(ErrorKind::Config, "sizing: provide exactly one of r2_nagelkerke or c_statistic");
  }
  if (r2_nagelkerke && !(*r2_nagelkerke >= 0.0 && *r2_nagelkerke <= 1.0)) {
    throw Error(ErrorKind::Config, "sizing: r2_nagelkerke must lie in [0, 1]");
  }
  if (c_statistic && !(*c_statistic > 0.5 && *c_statistic < 1.0)) {
    throw Error(ErrorKind::Config, "sizing: c_statistic must lie in (0.5, 1)");
  }
  if (!(delta_opt > 0.0)) throw Error(ErrorKind::Config, "sizing: delta_opt must be positive");
  if (!(intercept_margin > 0.0)) throw Error(ErrorKind::Config, "sizing: intercept_margin must be positive");
}

double cs_rsq_max(double phi) {
  if (!(phi > 0.0 && phi < 1.0)) throw Error(ErrorKind::Domain, "sizing: prevalence must lie in (0, 1)");
  return 1.0 - std::exp(2.0 * (phi * std::log(phi) + (1.0 - phi) * std::log(1.0 - phi)));
}

CoxSnell cs_rsq_from_nagelkerke(double r2_nagelkerke, double phi) {
  if (!(r2_nagelkerke >= 0.0 && r2_nagelkerke <= 1.0)) {
    throw Error(ErrorKind::Domain, "sizing: Nagelkerke R^2 must lie in [0, 1]");
  }
  const double max = cs_rsq_max(phi);
  return {r2_nagelkerke * max, max};
}

double cs_rsq_from_cstat(double c, double phi, std::uint64_t seed, Index sample_size) {
  if (!(c > 0.5 && c < 1.0)) throw Error(ErrorKind::Domain, "sizing: C-statistic must lie in (0.5, 1)");
  if (!(phi > 0.0 && phi < 1.0)) throw Error(ErrorKind::Domain, "sizing: prevalence must lie in (0, 1)");

  NormalLinearPredictor lp;
  lp.z.resize(static_cast<std::size_t>(sample_size));
  Rng rng = make_rng(derive_seed({seed, static_cast<std::uint64_t>(Stage::Sizing)}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& zi : lp.z) zi = normal(rng);
  std::sort(lp.z.begin(), lp.z.end());

  auto c_at = [&](double sigma) {
    const double mu = lp.solve_mean(sigma, phi);
    return lp.moments(sigma, mu).c;
  };

  double lo = 0.0;
  double hi = 1.0;
  int expansions = 0;
  while (c_at(hi) < c) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 6) {
      std::ostringstream msg;
      msg << "sizing: no normal linear predictor reaches C = " << c << " at prevalence " << phi
          << " (largest sd tried " << hi << ")";
      throw Error(ErrorKind::SizingFailure, msg.str());
    }
  }
  double sigma = 0.5 * (lo + hi);
  for (int iter = 0; iter < 80; ++iter) {
    sigma = 0.5 * (lo + hi);
    const double got = c_at(sigma);
    if (std::abs(got - c) < 1e-8 || hi - lo < 1e-12) break;
    if (got < c) {
      lo = sigma;
    } else {
      hi = sigma;
    }
  }
  const double mu = lp.solve_mean(sigma, phi);
  const auto m = lp.moments(sigma, mu);
  if (!(std::abs(m.c - c) < 1e-4)) {
    std::ostringstream msg;
    msg << "sizing: C-statistic solve did not converge (target " << c << ", reached " << m.c
        << ", sd " << sigma << ", mean " << mu << ")";
    throw Error(ErrorKind::SizingFailure, msg.str());
  }
  const double n = static_cast<double>(lp.z.size());
  return 1.0 - std::exp((m.ll_null - m.ll_model) * 2.0 / n);
}

SizingResult closed_form_min_n(const SizingInputs& in) {
  in.validate();
  SizingResult out;
  out.r2_cs_max = cs_rsq_max(in.phi);
  double r2 = in.r2_nagelkerke ? *in.r2_nagelkerke * out.r2_cs_max
                               : cs_rsq_from_cstat(*in.c_statistic, in.phi);
  r2 = round_digits(r2, in.r2_cs_digits);
  out.r2_cs = r2;
  if (!(r2 > 0.0)) {
    throw Error(ErrorKind::Domain, "sizing: anticipated R^2 must be positive");
  }

  out.n_criterion1 = shrinkage_criterion(in.p_params, in.shrinkage, r2);
  out.shrinkage_criterion2 = r2 / (r2 + in.delta_opt * out.r2_cs_max);
  out.n_criterion2 = shrinkage_criterion(in.p_params, out.shrinkage_criterion2, r2);
  const double z = 1.96 / in.intercept_margin;
  out.n_criterion3 = ceil_count(z * z * in.phi * (1.0 - in.phi));

  out.n_min = out.n_criterion1;
  out.binding_criterion = 1;
  if (out.n_criterion2 > out.n_min) {
    out.n_min = out.n_criterion2;
    out.binding_criterion = 2;
  }
  if (out.n_criterion3 > out.n_min) {
    out.n_min = out.n_criterion3;
    out.binding_criterion = 3;
  }
  out.epp = static_cast<double>(out.n_min) * in.phi / in.p_params;
  return out;
}

std::vector<std::int64_t> delta_grid(std::int64_t n_min, const std::vector<double>& deltas) {
  if (deltas.empty()) throw Error(ErrorKind::Config, "delta grid: at least one multiplier is required");
  if (n_min < 1) throw Error(ErrorKind::Config, "delta grid: n_min must be >= 1");
  std::vector<std::int64_t> out;
  out.reserve(deltas.size());
  for (double d : deltas) {
    if (!(d >= 1.0)) throw Error(ErrorKind::Config, "delta grid: multipliers must be >= 1");
    out.push_back(ceil_count(d * static_cast<double>(n_min)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::int64_t inflate_for_missingness(std::int64_t n, double pi_miss) {
  if (!(pi_miss >= 0.0 && pi_miss < 1.0)) {
    throw Error(ErrorKind::Domain, "inflate: pi_miss must lie in [0, 1)");
  }
  if (n < 0) throw Error(ErrorKind::Domain, "inflate: n must be non-negative");
  return ceil_count(static_cast<double>(n) / (1.0 - pi_miss));
}

}  // namespace mdsize
