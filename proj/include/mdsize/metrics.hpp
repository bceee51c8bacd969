#pragma once

#include <vector>

#include "mdsize/common.hpp"

namespace mdsize {

struct CalibrationResult {
  double slope = 0.0;
  double intercept = 0.0;
  double oe_ratio = 0.0;
  Index n_eval = 0;
  bool slope_defined = true;
};

/// Slope of y ~ logit(probs), intercept of y ~ offset(logit(probs)) and
/// mean(y) / mean(probs). Probabilities are clipped to [1e-10, 1 - 1e-10].
/// Constant predictions leave the slope undefined (NaN, slope_defined false).
CalibrationResult calibration(const Vector& y, const Vector& probs);

/// Mann-Whitney concordance with ties counted one half.
double c_statistic(const Vector& y, const Vector& probs);

/// 0.01, 0.02, ..., 0.99.
std::vector<double> default_thresholds();

struct NetBenefitCurve {
  std::vector<double> thresholds;
  std::vector<double> nb;
  std::vector<double> nb_treat_all;
  std::vector<double> nb_treat_none;
};

/// Classifies positive iff prob >= t.
NetBenefitCurve net_benefit_curve(const Vector& y, const Vector& probs,
                                  const std::vector<double>& thresholds);

struct LossCurve {
  std::vector<double> thresholds;
  std::vector<double> loss;  // nb(reference) - nb(model), unfloored
  std::vector<double> nb_reference;
  std::vector<double> nb_model;
  std::vector<double> nb_treat_all;
};

LossCurve decision_loss_curve(const Vector& y, const Vector& probs_ref, const Vector& probs_model,
                              const std::vector<double>& thresholds);

enum class MetricKind { CalibrationSlope, CalibrationIntercept, OeRatio, CStatistic };

const char* to_string(MetricKind k);

struct MetricValue {
  MetricKind kind;
  double value;
};

/// Signed reference-minus-model difference.
double degradation(const MetricValue& reference, const MetricValue& model);

/// Everything computed for one prediction vector.
struct Evaluation {
  CalibrationResult calibration;
  double c_statistic = 0.0;
  NetBenefitCurve net_benefit;
};

Evaluation evaluate(const Vector& y, const Vector& probs, const std::vector<double>& thresholds);

}  // namespace mdsize
