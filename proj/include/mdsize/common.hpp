#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mdsize {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class ErrorKind {
  Config,
  Shape,
  Domain,
  InvalidCovariance,
  CalibrationFailure,
  SizingFailure,
  DegenerateFit,
  DegenerateOutcome,
  DegeneratePredictions,
  RankDeficient,
  EmptyDataset,
  Usage,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline double expit(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + exp(eta)) without overflow.
inline double log1pexp(double eta) {
  if (eta > 35.0) return eta;
  if (eta < -35.0) return std::exp(eta);
  return std::log1p(std::exp(eta));
}

}  // namespace mdsize
