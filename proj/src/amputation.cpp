#include "mdsize/amputation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mdsize {

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::MCAR: return "MCAR";
    case Mechanism::MAR: return "MAR";
    case Mechanism::MNAR: return "MNAR";
  }
  return "?";
}

const char* to_string(PatternSet p) {
  return p == PatternSet::SingleVariable ? "single-variable" : "all-subsets";
}

namespace {

std::vector<double> default_weights(Mechanism mech, const std::vector<bool>& pattern) {
  std::vector<double> w(pattern.size(), 0.0);
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    switch (mech) {
      case Mechanism::MCAR: w[j] = 0.0; break;
      case Mechanism::MAR: w[j] = pattern[j] ? 0.0 : 1.0; break;
      case Mechanism::MNAR: w[j] = 1.0; break;
    }
  }
  return w;
}

void check_pattern(const std::vector<bool>& pattern, int p) {
  if (static_cast<int>(pattern.size()) != p) {
    throw Error(ErrorKind::Config, "amputation: pattern length does not match the number of variables");
  }
  int missing = 0;
  for (bool b : pattern) missing += b ? 1 : 0;
  if (missing == 0) throw Error(ErrorKind::Config, "amputation: every pattern needs at least one missing variable");
  if (missing == p) throw Error(ErrorKind::Config, "amputation: the all-missing pattern is not allowed");
}

}  // namespace

AmputationPlan plan_amputation(const MissingnessSpec& spec, int p) {
  if (p < 2) throw Error(ErrorKind::Config, "amputation: at least two variables are required");
  AmputationPlan plan;
  plan.mechanism = spec.mechanism;

  if (!spec.patterns.empty()) {
    plan.patterns = spec.patterns;
  } else if (spec.pattern_set == PatternSet::SingleVariable) {
    for (int k = 0; k < p; ++k) {
      std::vector<bool> pattern(static_cast<std::size_t>(p), false);
      pattern[static_cast<std::size_t>(k)] = true;
      plan.patterns.push_back(std::move(pattern));
    }
  } else {
    if (p > kMaxAllSubsetsVariables) {
      std::ostringstream msg;
      msg << "amputation: all-subsets patterns over " << p << " variables would create "
          << "2^" << p << " - 2 patterns; supply explicit patterns instead (limit "
          << kMaxAllSubsetsVariables << " variables)";
      throw Error(ErrorKind::Config, msg.str());
    }
    const std::uint64_t full = (std::uint64_t{1} << p) - 1;
    for (std::uint64_t bits = 1; bits < full; ++bits) {
      std::vector<bool> pattern(static_cast<std::size_t>(p));
      for (int j = 0; j < p; ++j) pattern[static_cast<std::size_t>(j)] = ((bits >> j) & 1U) != 0;
      plan.patterns.push_back(std::move(pattern));
    }
  }
  for (const auto& pattern : plan.patterns) check_pattern(pattern, p);

  if (!spec.weights.empty()) {
    if (spec.weights.size() != plan.patterns.size()) {
      throw Error(ErrorKind::Config, "amputation: one weight vector per pattern is required");
    }
    plan.weights = spec.weights;
    for (std::size_t k = 0; k < plan.patterns.size(); ++k) {
      const auto& w = plan.weights[k];
      const auto& pattern = plan.patterns[k];
      if (static_cast<int>(w.size()) != p) {
        throw Error(ErrorKind::Config, "amputation: weight vector length does not match the number of variables");
      }
      bool weight_on_missing = false;
      for (int j = 0; j < p; ++j) {
        if (pattern[static_cast<std::size_t>(j)] && w[static_cast<std::size_t>(j)] != 0.0) weight_on_missing = true;
      }
      if (spec.mechanism == Mechanism::MAR && weight_on_missing) {
        throw Error(ErrorKind::Config, "amputation: MAR weights must be zero on variables missing in the pattern");
      }
      if (spec.mechanism == Mechanism::MNAR && !weight_on_missing) {
        throw Error(ErrorKind::Config, "amputation: MNAR weights need a nonzero weight on a missing variable");
      }
    }
  } else {
    for (const auto& pattern : plan.patterns) {
      plan.weights.push_back(default_weights(spec.mechanism, pattern));
    }
  }
  plan.allocation.assign(plan.patterns.size(), 1.0 / static_cast<double>(plan.patterns.size()));
  return plan;
}

double solve_amputation_offset(std::span<const double> z, double pi) {
  if (!(pi > 0.0 && pi < 1.0)) throw Error(ErrorKind::Domain, "amputation: proportion must lie in (0, 1)");
  auto mean_prob = [&](double a) {
    double s = 0.0;
    for (double zi : z) s += expit(a + zi);
    return s / static_cast<double>(z.size());
  };
  double lo = -60.0;
  double hi = 60.0;
  double mid = logit(pi);
  for (int iter = 0; iter < 200; ++iter) {
    const double m = mean_prob(mid);
    if (std::abs(m - pi) < 1e-12) break;
    if (m < pi) {
      lo = mid;
    } else {
      hi = mid;
    }
    mid = 0.5 * (lo + hi);
    if (hi - lo < 1e-13) break;
  }
  return mid;
}

DataSet ampute(const DataSet& data, const AmputationPlan& plan, double pi_miss, Rng& rng) {
  data.check_shape();
  if (!(pi_miss >= 0.0 && pi_miss < 1.0)) {
    throw Error(ErrorKind::Domain, "amputation: pi_miss must lie in [0, 1)");
  }
  if (!data.fully_observed()) {
    throw Error(ErrorKind::Usage, "amputation: input must be fully observed");
  }
  DataSet out = data;
  if (pi_miss == 0.0) return out;

  const std::vector<ColumnGroup> groups =
      data.groups.empty() ? singleton_groups(data.cols()) : data.groups;
  const std::size_t n_vars = groups.size();
  for (const auto& pattern : plan.patterns) {
    if (pattern.size() != n_vars) {
      throw Error(ErrorKind::Shape, "amputation: plan does not match the dataset's variables");
    }
  }

  const Index n = data.rows();
  std::discrete_distribution<std::size_t> pick(plan.allocation.begin(), plan.allocation.end());
  std::vector<std::vector<Index>> members(plan.patterns.size());
  for (Index i = 0; i < n; ++i) members[pick(rng)].push_back(i);

  // Scores use standardized columns so variables on different scales carry
  // equal weight.
  const Vector col_mean = data.x.colwise().mean();
  Vector col_scale(data.cols());
  for (Index c = 0; c < data.cols(); ++c) {
    const double sd = std::sqrt((data.x.col(c).array() - col_mean[c]).square().mean());
    col_scale[c] = sd > 0.0 ? 1.0 / sd : 0.0;
  }

  std::vector<double> prob(static_cast<std::size_t>(n), 0.0);
  std::vector<double> z;
  int constant_patterns = 0;
  for (std::size_t k = 0; k < plan.patterns.size(); ++k) {
    const auto& rows = members[k];
    if (rows.empty()) continue;
    const auto& w = plan.weights[k];
    bool any_weight = false;
    for (double wj : w) any_weight = any_weight || wj != 0.0;

    z.assign(rows.size(), 0.0);
    if (any_weight) {
      for (std::size_t r = 0; r < rows.size(); ++r) {
        double s = 0.0;
        for (std::size_t g = 0; g < n_vars; ++g) {
          if (w[g] == 0.0) continue;
          for (Index c : groups[g].columns) s += w[g] * (data.x(rows[r], c) - col_mean[c]) * col_scale[c];
        }
        z[r] = s;
      }
      double mean = 0.0;
      for (double v : z) mean += v;
      mean /= static_cast<double>(z.size());
      double var = 0.0;
      for (double v : z) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(z.size()));
      if (sd > 0.0 && std::isfinite(sd)) {
        for (double& v : z) v = (v - mean) / sd;
      } else {
        std::fill(z.begin(), z.end(), 0.0);
        if (rows.size() > 1) ++constant_patterns;
      }
    }
    const double a = solve_amputation_offset(z, pi_miss);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      prob[static_cast<std::size_t>(rows[r])] = expit(a + z[r]);
    }
  }

  if (constant_patterns > 0) {
    out.warnings.push_back("amputation: constant weighted score in " + std::to_string(constant_patterns) +
                           " pattern(s); those rows were amputed completely at random");
  }

  // Pattern of each row, for masking.
  std::vector<std::size_t> row_pattern(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < members.size(); ++k) {
    for (Index i : members[k]) row_pattern[static_cast<std::size_t>(i)] = k;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    if (unif(rng) >= prob[static_cast<std::size_t>(i)]) continue;
    const auto& pattern = plan.patterns[row_pattern[static_cast<std::size_t>(i)]];
    for (std::size_t g = 0; g < n_vars; ++g) {
      if (!pattern[g]) continue;
      for (Index c : groups[g].columns) {
        out.observed(i, c) = false;
        out.x(i, c) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return out;
}

}  // namespace mdsize
