#pragma once

#include <string>
#include <vector>

#include "mdsize/config.hpp"
#include "mdsize/engine.hpp"

namespace mdsize {

/// Six significant digits; NaN renders as NA.
std::string format_number(double v);

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string repeats_csv(const std::vector<RepeatResult>& repeats);
std::string summary_csv(const std::vector<CellSummary>& summaries);
std::string evpi_csv(const std::vector<CellSummary>& summaries);
std::string search_csv(const std::vector<SearchResult>& results);
std::string sizing_csv(const SizingResult& r);

struct ManifestInfo {
  std::string command;
  std::string started;
  std::string finished;
  int workers = 1;
  std::vector<std::string> outputs;
};

std::string manifest_json(const LoadedConfig& cfg, const RunResults& results, const ManifestInfo& info);

/// Writes repeats.csv, summary.csv, evpi.csv and manifest.json into out_dir.
/// Returns the written paths.
std::vector<std::string> emit_results(const LoadedConfig& cfg, const RunResults& results,
                                      const std::string& out_dir, ManifestInfo info);

/// UTC time as ISO 8601.
std::string utc_timestamp();

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace mdsize
