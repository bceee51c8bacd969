#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdsize/engine.hpp"

namespace mdsize {

/// Parsed and expanded configuration file.
struct LoadedConfig {
  std::vector<ScenarioConfig> scenarios;
  SearchTargets search;
  std::string canonical;  // normalized JSON text of the input document
  std::uint64_t hash = 0;  // hash of `canonical`
};

/// Parses a JSON document. Top-level scenario fields act as defaults for
/// each entry of "scenarios"; without that array the document is a single
/// scenario. List-valued rho, pi_miss, mechanism and named beta sets expand
/// into one scenario per combination.
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::string& path);

/// Coefficients with every predictor informative; the default when no beta is given.
std::vector<double> default_beta();

}  // namespace mdsize
