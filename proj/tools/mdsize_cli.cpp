// Command-line front end: closed-form sizing, simulation grids, the grow-N
// search and the missingness inflation rule.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdsize/config.hpp"
#include "mdsize/engine.hpp"
#include "mdsize/output.hpp"
#include "mdsize/sizing.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void report_error(const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

bool is_validation(mdsize::ErrorKind k) {
  using mdsize::ErrorKind;
  return k == ErrorKind::Config || k == ErrorKind::Usage || k == ErrorKind::Domain || k == ErrorKind::Shape ||
         k == ErrorKind::InvalidCovariance;
}

struct RunFlags {
  std::string config;
  std::string out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory")->required();
  cmd->add_option("--workers", f.workers, "Worker threads (overrides MDSIZE_WORKERS)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Override base_seed of every scenario");
  cmd->add_option("--repeats", f.repeats, "Override repeats of every scenario")->check(CLI::Range(2, 1000000));
  cmd->add_flag("--quiet", f.quiet, "No progress messages");
}

int resolve_workers(const RunFlags& f) {
  if (f.workers) return *f.workers;
  if (const char* env = std::getenv("MDSIZE_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw mdsize::Error(mdsize::ErrorKind::Config, "MDSIZE_WORKERS must be a positive integer");
  }
  return 1;
}

mdsize::LoadedConfig load_with_overrides(const RunFlags& f) {
  auto cfg = mdsize::load_config(f.config);
  for (auto& s : cfg.scenarios) {
    if (f.seed) s.base_seed = *f.seed;
    if (f.repeats) s.repeats = *f.repeats;
    s.validate();
  }
  return cfg;
}

// Absent cells mean the run did not fully succeed.
int finish(const mdsize::RunResults& results) {
  nlohmann::json absent = nlohmann::json::array();
  for (const auto& s : results.summaries) {
    if (!s.absent) continue;
    absent.push_back({{"scenario_id", s.scenario_id},
                      {"delta", s.delta},
                      {"method", s.method},
                      {"family", s.family},
                      {"eval_mode", mdsize::to_string(s.mode)},
                      {"succeeded", s.succeeded},
                      {"attempted", s.attempted}});
  }
  if (absent.empty()) return 0;
  nlohmann::json j;
  j["error"] = {{"kind", "absent-cells"}, {"message", "some cells had fewer than two successful repeats"},
                {"cells", absent}};
  std::cerr << j.dump() << '\n';
  return kExitRuntime;
}

int run_simulate(const RunFlags& f, const char* command, const std::optional<mdsize::SearchTargets>& override_targets) {
  const auto cfg = load_with_overrides(f);
  mdsize::RunOptions opts;
  opts.workers = resolve_workers(f);
  if (!f.quiet) opts.progress = [](const std::string& msg) { std::cerr << msg << '\n'; };

  std::optional<mdsize::SearchTargets> targets;
  if (std::string(command) == "search") {
    targets = override_targets && override_targets->any() ? *override_targets : cfg.search;
    if (!targets->any()) {
      throw mdsize::Error(mdsize::ErrorKind::Config, "search: no targets in the config or on the command line");
    }
  }

  mdsize::ManifestInfo info;
  info.command = command;
  info.workers = opts.workers;
  info.started = mdsize::utc_timestamp();
  const auto results = mdsize::run_scenarios(cfg.scenarios, opts);
  info.finished = mdsize::utc_timestamp();
  if (targets) {
    const auto found = mdsize::search_min_n(results.summaries, *targets);
    const std::string path = (std::filesystem::path(f.out) / "search.csv").string();
    std::filesystem::create_directories(f.out);
    mdsize::write_file_atomic(path, mdsize::search_csv(found));
    info.outputs.push_back(path);
    std::cout << mdsize::search_csv(found);
  }
  mdsize::emit_results(cfg, results, f.out, info);
  return finish(results);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-based sample size for prediction models with missing predictor data"};
  app.require_subcommand(1);

  // sizing
  auto* sizing = app.add_subcommand("sizing", "Closed-form minimum sample size");
  std::string sizing_config;
  mdsize::SizingInputs in;
  std::optional<double> r2n;
  std::optional<double> cstat;
  std::vector<double> deltas{1.0, 1.25, 1.5, 1.75, 2.0};
  std::string sizing_out;
  sizing->add_option("--config", sizing_config, "Take sizing inputs from the first scenario of a config")
      ->check(CLI::ExistingFile);
  sizing->add_option("--p", in.p_params, "Candidate predictor parameters");
  sizing->add_option("--phi", in.phi, "Outcome prevalence");
  sizing->add_option("--shrinkage", in.shrinkage, "Target shrinkage");
  sizing->add_option("--r2-nagelkerke", r2n, "Anticipated Nagelkerke R^2");
  sizing->add_option("--c-statistic", cstat, "Anticipated C-statistic");
  sizing->add_option("--delta-opt", in.delta_opt, "Acceptable optimism in apparent R^2");
  sizing->add_option("--intercept-margin", in.intercept_margin, "Margin of error for the overall risk");
  sizing->add_option("--deltas", deltas, "Multipliers for the development size grid");
  sizing->add_option("--out", sizing_out, "Directory for sizing.csv");

  // simulate / search
  RunFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "Run every scenario cell and write summaries");
  add_run_flags(simulate, sim_flags);

  RunFlags search_flags;
  mdsize::SearchTargets cli_targets;
  auto* search = app.add_subcommand("search", "Smallest development size meeting performance targets");
  add_run_flags(search, search_flags);
  search->add_option("--median-slope-min", cli_targets.median_slope_min, "Minimum median calibration slope");
  search->add_option("--assurance-min", cli_targets.assurance_min, "Minimum assurance probability");
  search->add_option("--max-evpi", cli_targets.max_evpi, "Maximum EVPI at the EVPI thresholds");

  // inflate
  auto* inflate = app.add_subcommand("inflate", "Inflate a sample size by 1 / (1 - pi_miss)");
  std::int64_t inflate_n = 0;
  double inflate_pi = 0.0;
  inflate->add_option("--n", inflate_n, "Sample size")->required();
  inflate->add_option("--pi-miss", inflate_pi, "Proportion of individuals with missing data")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitValidation;
  }

  try {
    if (*sizing) {
      if (!sizing_config.empty()) {
        const auto cfg = mdsize::load_config(sizing_config);
        in = cfg.scenarios.front().sizing;
        deltas = cfg.scenarios.front().deltas;
      } else {
        in.r2_nagelkerke = r2n;
        in.c_statistic = cstat;
        if (!r2n && !cstat) in.r2_nagelkerke = 0.15;
      }
      const auto r = mdsize::closed_form_min_n(in);
      std::string text = mdsize::sizing_csv(r);
      std::cout << text;
      std::cout << "delta_grid";
      for (auto n : mdsize::delta_grid(r.n_min, deltas)) std::cout << ',' << n;
      std::cout << '\n';
      if (!sizing_out.empty()) {
        std::filesystem::create_directories(sizing_out);
        mdsize::write_file_atomic((std::filesystem::path(sizing_out) / "sizing.csv").string(), text);
      }
      return 0;
    }
    if (*inflate) {
      std::cout << mdsize::inflate_for_missingness(inflate_n, inflate_pi) << '\n';
      return 0;
    }
    if (*simulate) return run_simulate(sim_flags, "simulate", std::nullopt);
    if (*search) return run_simulate(search_flags, "search", cli_targets);
  } catch (const mdsize::Error& e) {
    report_error(mdsize::to_string(e.kind()), e.what());
    return is_validation(e.kind()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return kExitRuntime;
  }
  return 0;
}
