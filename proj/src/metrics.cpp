#include "mdsize/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mdsize {

namespace {

constexpr double kClip = 1e-10;

void check_pair(const Vector& y, const Vector& probs, const char* who) {
  if (y.size() != probs.size()) {
    throw Error(ErrorKind::Shape, std::string(who) + ": outcome and prediction lengths differ");
  }
  if (y.size() == 0) throw Error(ErrorKind::EmptyDataset, std::string(who) + ": no rows");
}

void check_both_classes(const Vector& y, const char* who) {
  const double s = y.sum();
  if (s <= 0.0 || s >= static_cast<double>(y.size())) {
    throw Error(ErrorKind::DegenerateOutcome, std::string(who) + ": outcome has a single class");
  }
}

void check_thresholds(const std::vector<double>& thresholds) {
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::Domain, "net benefit: thresholds must lie in (0, 1)");
  }
}

// Newton fit of y ~ a + b * lp; returns {a, b}.
std::pair<double, double> logistic_on_score(const Vector& y, const Vector& lp) {
  const Index n = y.size();
  double a = logit(std::clamp(y.mean(), kClip, 1.0 - kClip));
  double b = 0.0;
  auto nll = [&](double aa, double bb) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double eta = aa + bb * lp[i];
      s += log1pexp(eta) - y[i] * eta;
    }
    return s;
  };
  double f = nll(a, b);
  for (int iter = 0; iter < 100; ++iter) {
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double mu = expit(a + b * lp[i]);
      const double r = y[i] - mu;
      const double w = mu * (1.0 - mu);
      g0 += r;
      g1 += r * lp[i];
      h00 += w;
      h01 += w * lp[i];
      h11 += w * lp[i] * lp[i];
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0)) break;
    double da = (h11 * g0 - h01 * g1) / det;
    double db = (h00 * g1 - h01 * g0) / det;
    double nf = nll(a + da, b + db);
    for (int half = 0; half < 40 && nf > f; ++half) {
      da *= 0.5;
      db *= 0.5;
      nf = nll(a + da, b + db);
    }
    if (nf > f) break;
    a += da;
    b += db;
    const double change = f - nf;
    f = nf;
    if (std::max(std::abs(da), std::abs(db)) < 1e-10 || change < 1e-13 * (1.0 + f)) break;
  }
  return {a, b};
}

// Newton fit of y ~ a + offset(lp).
double offset_intercept(const Vector& y, const Vector& lp) {
  double a = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double g = 0.0, h = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const double mu = expit(a + lp[i]);
      g += y[i] - mu;
      h += mu * (1.0 - mu);
    }
    if (!(h > 0.0)) break;
    const double step = std::clamp(g / h, -5.0, 5.0);
    a += step;
    if (std::abs(step) < 1e-12) break;
  }
  return a;
}

}  // namespace

CalibrationResult calibration(const Vector& y, const Vector& probs) {
  check_pair(y, probs, "calibration");
  check_both_classes(y, "calibration");
  const Index n = y.size();
  Vector lp(n);
  double psum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double p = std::clamp(probs[i], kClip, 1.0 - kClip);
    lp[i] = logit(p);
    psum += probs[i];
  }
  CalibrationResult r;
  r.n_eval = n;
  r.oe_ratio = y.mean() / (psum / static_cast<double>(n));
  r.intercept = offset_intercept(y, lp);
  const double lo = lp.minCoeff();
  const double hi = lp.maxCoeff();
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
    r.slope = std::numeric_limits<double>::quiet_NaN();
    r.slope_defined = false;
  } else {
    r.slope = logistic_on_score(y, lp).second;
  }
  return r;
}

double c_statistic(const Vector& y, const Vector& probs) {
  check_pair(y, probs, "c-statistic");
  check_both_classes(y, "c-statistic");
  const Index n = y.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return probs[a] < probs[b]; });
  // Sum of mid-ranks of events.
  double rank_sum = 0.0;
  double events = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double tied_events = 0.0;
    while (j < order.size() && probs[order[j]] == probs[order[i]]) {
      tied_events += y[order[j]];
      ++j;
    }
    const double mid_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    rank_sum += tied_events * mid_rank;
    events += tied_events;
    i = j;
  }
  const double non_events = static_cast<double>(n) - events;
  return (rank_sum - events * (events + 1.0) / 2.0) / (events * non_events);
}

std::vector<double> default_thresholds() {
  std::vector<double> t(99);
  for (int k = 0; k < 99; ++k) t[static_cast<std::size_t>(k)] = (k + 1) / 100.0;
  return t;
}

NetBenefitCurve net_benefit_curve(const Vector& y, const Vector& probs,
                                  const std::vector<double>& thresholds) {
  check_pair(y, probs, "net benefit");
  check_thresholds(thresholds);
  std::vector<double> ev;
  std::vector<double> non;
  for (Index i = 0; i < y.size(); ++i) (y[i] == 1.0 ? ev : non).push_back(probs[i]);
  std::sort(ev.begin(), ev.end());
  std::sort(non.begin(), non.end());
  const double n = static_cast<double>(y.size());
  const double prev = static_cast<double>(ev.size()) / n;

  NetBenefitCurve c;
  c.thresholds = thresholds;
  for (double t : thresholds) {
    const double tp = static_cast<double>(ev.end() - std::lower_bound(ev.begin(), ev.end(), t));
    const double fp = static_cast<double>(non.end() - std::lower_bound(non.begin(), non.end(), t));
    const double odds = t / (1.0 - t);
    c.nb.push_back(tp / n - fp / n * odds);
    c.nb_treat_all.push_back(prev - (1.0 - prev) * odds);
    c.nb_treat_none.push_back(0.0);
  }
  return c;
}

LossCurve decision_loss_curve(const Vector& y, const Vector& probs_ref, const Vector& probs_model,
                              const std::vector<double>& thresholds) {
  const NetBenefitCurve ref = net_benefit_curve(y, probs_ref, thresholds);
  const NetBenefitCurve mod = net_benefit_curve(y, probs_model, thresholds);
  LossCurve l;
  l.thresholds = thresholds;
  l.nb_reference = ref.nb;
  l.nb_model = mod.nb;
  l.nb_treat_all = ref.nb_treat_all;
  l.loss.resize(thresholds.size());
  for (std::size_t k = 0; k < thresholds.size(); ++k) l.loss[k] = ref.nb[k] - mod.nb[k];
  return l;
}

const char* to_string(MetricKind k) {
  switch (k) {
    case MetricKind::CalibrationSlope: return "calibration_slope";
    case MetricKind::CalibrationIntercept: return "calibration_intercept";
    case MetricKind::OeRatio: return "oe_ratio";
    case MetricKind::CStatistic: return "c_statistic";
  }
  return "?";
}

double degradation(const MetricValue& reference, const MetricValue& model) {
  if (reference.kind != model.kind) throw Error(ErrorKind::Usage, "degradation: metric kinds differ");
  return reference.value - model.value;
}

Evaluation evaluate(const Vector& y, const Vector& probs, const std::vector<double>& thresholds) {
  Evaluation e;
  e.calibration = calibration(y, probs);
  e.c_statistic = c_statistic(y, probs);
  e.net_benefit = net_benefit_curve(y, probs, thresholds);
  return e;
}

}  // namespace mdsize
