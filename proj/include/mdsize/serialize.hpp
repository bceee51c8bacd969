#pragma once

#include <string>

#include "mdsize/imputation.hpp"
#include "mdsize/modeling.hpp"

namespace mdsize {

inline constexpr int kArtifactVersion = 1;

/// Versioned JSON artifacts. Doubles are written with round-trip precision,
/// so a reloaded object predicts bit-identically.
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);

std::string imputer_to_json(const FittedImputer& imp);
FittedImputer imputer_from_json(const std::string& text);

}  // namespace mdsize
