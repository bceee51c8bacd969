#include "mdsize/output.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include <unistd.h>

#include <json.hpp>

namespace mdsize {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Io, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into '" + path + "'");
  }
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string repeats_csv(const std::vector<RepeatResult>& repeats) {
  struct Row {
    const RepeatResult* rr;
    const CellRecord* rec;
  };
  std::vector<Row> rows;
  for (const auto& rr : repeats) {
    for (const auto& rec : rr.records) rows.push_back({&rr, &rec});
  }
  auto key = [](const Row& r) {
    return std::make_tuple(std::cref(r.rr->scenario_id), r.rr->delta, r.rr->repeat, std::cref(r.rec->method),
                           std::cref(r.rec->family), static_cast<int>(r.rec->mode));
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) { return key(a) < key(b); });

  std::ostringstream os;
  os << "scenario_id,delta,repeat,method,family,eval_mode,metric,value,flag\n";
  const auto& names = metric_names();
  for (const auto& r : rows) {
    const std::string flag = csv_field(r.rec->flag_text());
    for (int m = 0; m < kMetricCount; ++m) {
      os << csv_field(r.rr->scenario_id) << ',' << format_number(r.rr->delta) << ',' << r.rr->repeat << ','
         << r.rec->method << ',' << r.rec->family << ',' << to_string(r.rec->mode) << ',' << names[static_cast<std::size_t>(m)]
         << ',' << format_number(r.rec->metrics[static_cast<std::size_t>(m)]) << ',' << flag << '\n';
    }
  }
  return os.str();
}

namespace {

std::vector<const CellSummary*> sorted_summaries(const std::vector<CellSummary>& summaries) {
  std::vector<const CellSummary*> v;
  for (const auto& s : summaries) v.push_back(&s);
  std::stable_sort(v.begin(), v.end(), [](const CellSummary* a, const CellSummary* b) {
    return std::make_tuple(std::cref(a->scenario_id), a->delta, std::cref(a->method), std::cref(a->family),
                           static_cast<int>(a->mode)) <
           std::make_tuple(std::cref(b->scenario_id), b->delta, std::cref(b->method), std::cref(b->family),
                           static_cast<int>(b->mode));
  });
  return v;
}

}  // namespace

std::string summary_csv(const std::vector<CellSummary>& summaries) {
  std::ostringstream os;
  os << "scenario_id,delta,n_dev,method,family,eval_mode,metric,median,p2.5,p25,p75,p97.5,assurance,failure_rate\n";
  const auto& names = metric_names();
  for (const auto* s : sorted_summaries(summaries)) {
    for (int m = 0; m < kMetricCount; ++m) {
      const auto& q = s->quantiles[static_cast<std::size_t>(m)];
      os << csv_field(s->scenario_id) << ',' << format_number(s->delta) << ',' << s->n_dev << ',' << s->method << ','
         << s->family << ',' << to_string(s->mode) << ',' << names[static_cast<std::size_t>(m)] << ',';
      if (q) {
        os << format_number(q->median) << ',' << format_number(q->p2_5) << ',' << format_number(q->p25) << ','
           << format_number(q->p75) << ',' << format_number(q->p97_5);
      } else {
        os << "NA,NA,NA,NA,NA";
      }
      os << ',' << format_number(s->assurance) << ',' << format_number(s->failure_rate) << '\n';
    }
  }
  return os.str();
}

std::string evpi_csv(const std::vector<CellSummary>& summaries) {
  std::ostringstream os;
  os << "scenario_id,delta,method,family,eval_mode,threshold,evpi,nb_ref,nb_model,nb_all\n";
  for (const auto* s : sorted_summaries(summaries)) {
    if (s->absent) continue;
    for (std::size_t t = 0; t < s->thresholds.size(); ++t) {
      os << csv_field(s->scenario_id) << ',' << format_number(s->delta) << ',' << s->method << ',' << s->family << ','
         << to_string(s->mode) << ',' << format_number(s->thresholds[t]) << ',' << format_number(s->evpi[t]) << ','
         << format_number(s->nb_reference[t]) << ',' << format_number(s->nb_model[t]) << ','
         << format_number(s->nb_treat_all[t]) << '\n';
    }
  }
  return os.str();
}

std::string search_csv(const std::vector<SearchResult>& results) {
  std::vector<const SearchResult*> v;
  for (const auto& r : results) v.push_back(&r);
  std::stable_sort(v.begin(), v.end(), [](const SearchResult* a, const SearchResult* b) {
    return std::make_tuple(std::cref(a->scenario_id), std::cref(a->method), std::cref(a->family),
                           static_cast<int>(a->mode)) <
           std::make_tuple(std::cref(b->scenario_id), std::cref(b->method), std::cref(b->family),
                           static_cast<int>(b->mode));
  });
  std::ostringstream os;
  os << "scenario_id,method,family,eval_mode,status,delta,n_dev,median_slope,assurance,max_evpi\n";
  for (const auto* r : v) {
    os << csv_field(r->scenario_id) << ',' << r->method << ',' << r->family << ',' << to_string(r->mode) << ','
       << (r->achieved ? "achieved" : "not-achieved-closest") << ',' << format_number(r->delta) << ',' << r->n_dev
       << ',' << format_number(r->median_slope) << ',' << format_number(r->assurance) << ','
       << format_number(r->max_evpi) << '\n';
  }
  return os.str();
}

std::string sizing_csv(const SizingResult& r) {
  std::ostringstream os;
  os << "r2_cs,r2_cs_max,n_criterion1,n_criterion2,n_criterion3,n_min,binding_criterion,shrinkage_criterion2,epp\n";
  os << format_number(r.r2_cs) << ',' << format_number(r.r2_cs_max) << ',' << r.n_criterion1 << ','
     << r.n_criterion2 << ',' << r.n_criterion3 << ',' << r.n_min << ',' << r.binding_criterion << ','
     << format_number(r.shrinkage_criterion2) << ',' << format_number(r.epp) << '\n';
  return os.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_json(const LoadedConfig& cfg, const RunResults& results, const ManifestInfo& info) {
  using json = nlohmann::ordered_json;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash));
  json m;
  m["tool"] = "mdsize";
  m["tool_version"] = kToolVersion;
  m["command"] = info.command;
  m["config_hash"] = hash;
  m["config_hash_algorithm"] = "fnv1a-64 over the stored config text";
  m["started"] = info.started;
  m["finished"] = info.finished;
  m["workers"] = info.workers;
  m["outputs"] = info.outputs;
  json scenarios = json::array();
  for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
    const auto& s = cfg.scenarios[i];
    json j;
    j["id"] = s.id;
    j["base_seed"] = s.base_seed;
    j["repeats"] = s.repeats;
    j["pooling"] = to_string(s.pooling);
    j["target_population"] = to_string(s.target_population);
    j["target_mice_use_outcome"] = s.target_mice_use_outcome;
    if (i < results.prepared.size()) {
      const auto& p = results.prepared[i];
      j["intercept"] = p.beta0;
      j["n_min"] = p.n_min;
      j["n_dev"] = p.n_dev;
    }
    scenarios.push_back(std::move(j));
  }
  m["scenarios"] = std::move(scenarios);
  m["config"] = cfg.canonical;
  return m.dump(2) + "\n";
}

std::vector<std::string> emit_results(const LoadedConfig& cfg, const RunResults& results, const std::string& out_dir,
                                      ManifestInfo info) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + out_dir + "'");
  const fs::path dir(out_dir);
  const std::vector<std::pair<std::string, std::string>> files{
      {(dir / "repeats.csv").string(), repeats_csv(results.repeats)},
      {(dir / "summary.csv").string(), summary_csv(results.summaries)},
      {(dir / "evpi.csv").string(), evpi_csv(results.summaries)},
  };
  std::vector<std::string> written;
  for (const auto& [path, text] : files) {
    write_file_atomic(path, text);
    written.push_back(path);
  }
  const std::string manifest = (dir / "manifest.json").string();
  written.push_back(manifest);
  info.outputs.insert(info.outputs.end(), written.begin(), written.end());
  write_file_atomic(manifest, manifest_json(cfg, results, info));
  return written;
}

}  // namespace mdsize
