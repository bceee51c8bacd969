#include "mdsize/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mdsize {

using json = nlohmann::json;

std::vector<double> default_beta() { return {0.5, 0.2, 0.3, 0.1, 0.5, 0.2, 0.3, 0.05, 0.1, 0.15}; }

namespace {

const std::set<std::string> kScenarioKeys{
    "id",         "predictors", "outcome",       "n_target",          "sizing",
    "deltas",     "missingness", "methods",      "families",          "repeats",
    "base_seed",  "eval_modes", "target_population", "pooling",       "target_mice_use_outcome",
    "slope_band", "thresholds", "imputation",    "lasso",             "description"};

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::Config, "config: " + msg); }

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) fail("'" + path + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail("unknown field '" + join(path, key) + "'");
  }
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail("'" + path + "' must be a number");
  return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail("'" + path + "' must be an integer");
  return v.get<std::int64_t>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail("'" + path + "' must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail("'" + path + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> as_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) fail("'" + path + "' must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> as_strings(const json& v, const std::string& path) {
  if (!v.is_array()) fail("'" + path + "' must be an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Mechanism parse_mechanism(const json& v, const std::string& path) {
  const std::string s = lower(as_string(v, path));
  if (s == "mcar") return Mechanism::MCAR;
  if (s == "mar") return Mechanism::MAR;
  if (s == "mnar") return Mechanism::MNAR;
  fail("'" + path + "' must be one of MCAR, MAR, MNAR");
}

std::string number_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// One axis of the scenario grid: labelled alternatives, `listed` when the
// config gave more than a scalar.
template <class T>
struct Axis {
  std::vector<std::pair<std::string, T>> values;
  bool listed = false;
};

PredictorSpec parse_predictors(const json& obj, const std::string& path, Axis<double>& rho) {
  check_keys(obj, {"p", "rho", "mode", "summaries"}, path);
  PredictorSpec pred;
  if (obj.contains("mode")) {
    const std::string m = as_string(obj["mode"], join(path, "mode"));
    if (m == "block-pairs-mvn") {
      pred.mode = PredictorMode::BlockPairsMvn;
    } else if (m == "independent-summaries") {
      pred.mode = PredictorMode::IndependentSummaries;
    } else {
      fail("'" + join(path, "mode") + "' must be block-pairs-mvn or independent-summaries");
    }
  }
  if (obj.contains("summaries")) {
    const auto& arr = obj["summaries"];
    const std::string sp = join(path, "summaries");
    if (!arr.is_array()) fail("'" + sp + "' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = sp + "[" + std::to_string(i) + "]";
      check_keys(arr[i], {"name", "type", "mean", "variance", "levels", "proportions"}, ip);
      VariableSummary s;
      s.name = arr[i].contains("name") ? as_string(arr[i]["name"], join(ip, "name")) : "x" + std::to_string(i + 1);
      const std::string type = arr[i].contains("type") ? as_string(arr[i]["type"], join(ip, "type")) : "continuous";
      if (type == "continuous") {
        s.kind = VariableSummary::Kind::Continuous;
        if (!arr[i].contains("mean") || !arr[i].contains("variance")) {
          fail("'" + ip + "' is continuous and needs mean and variance");
        }
        s.mean = as_number(arr[i]["mean"], join(ip, "mean"));
        s.variance = as_number(arr[i]["variance"], join(ip, "variance"));
      } else if (type == "categorical") {
        s.kind = VariableSummary::Kind::Categorical;
        if (!arr[i].contains("levels") || !arr[i].contains("proportions")) {
          fail("'" + ip + "' is categorical and needs levels and proportions");
        }
        s.levels = as_strings(arr[i]["levels"], join(ip, "levels"));
        s.proportions = as_numbers(arr[i]["proportions"], join(ip, "proportions"));
      } else {
        fail("'" + join(ip, "type") + "' must be continuous or categorical");
      }
      pred.summaries.push_back(std::move(s));
    }
  }
  if (pred.mode == PredictorMode::IndependentSummaries) {
    if (pred.summaries.empty()) fail("'" + path + "' in independent-summaries mode needs summaries");
    pred.p = static_cast<Index>(pred.summaries.size());
    if (obj.contains("p") && as_integer(obj["p"], join(path, "p")) != pred.p) {
      fail("'" + join(path, "p") + "' disagrees with the number of summaries");
    }
  } else if (obj.contains("p")) {
    const auto p = as_integer(obj["p"], join(path, "p"));
    if (p < 1) fail("'" + join(path, "p") + "' must be positive");
    pred.p = static_cast<Index>(p);
  }
  if (obj.contains("rho")) {
    const auto& r = obj["rho"];
    if (r.is_array()) {
      rho.listed = true;
      for (double v : as_numbers(r, join(path, "rho"))) rho.values.push_back({"rho-" + number_label(v), v});
      if (rho.values.empty()) fail("'" + join(path, "rho") + "' must not be empty");
    } else {
      rho.values.push_back({"", as_number(r, join(path, "rho"))});
    }
  } else {
    rho.values.push_back({"", 0.0});
  }
  return pred;
}

OutcomeSpec parse_outcome(const json& obj, const std::string& path, Axis<std::vector<double>>& betas) {
  check_keys(obj, {"beta", "intercept", "prevalence"}, path);
  OutcomeSpec out;
  if (obj.contains("intercept")) out.beta0 = as_number(obj["intercept"], join(path, "intercept"));
  if (obj.contains("prevalence")) out.target_prevalence = as_number(obj["prevalence"], join(path, "prevalence"));
  const std::string bp = join(path, "beta");
  if (!obj.contains("beta")) {
    betas.values.push_back({"", default_beta()});
  } else if (obj["beta"].is_object()) {
    betas.listed = true;
    for (const auto& [name, v] : obj["beta"].items()) betas.values.push_back({"beta-" + name, as_numbers(v, join(bp, name))});
    if (betas.values.empty()) fail("'" + bp + "' must not be empty");
  } else if (obj["beta"].is_array() && !obj["beta"].empty() && obj["beta"][0].is_array()) {
    betas.listed = true;
    for (std::size_t i = 0; i < obj["beta"].size(); ++i) {
      betas.values.push_back({"beta-" + std::to_string(i + 1),
                              as_numbers(obj["beta"][i], bp + "[" + std::to_string(i) + "]")});
    }
  } else {
    betas.values.push_back({"", as_numbers(obj["beta"], bp)});
  }
  return out;
}

MissingnessSpec parse_missingness(const json& obj, const std::string& path, Axis<Mechanism>* mech,
                                  Axis<double>* pi) {
  check_keys(obj, {"mechanism", "pi_miss", "pattern_set", "patterns", "weights"}, path);
  MissingnessSpec m;
  if (obj.contains("mechanism")) {
    const auto& v = obj["mechanism"];
    if (v.is_array()) {
      if (!mech) fail("'" + join(path, "mechanism") + "' cannot be a list here");
      mech->listed = true;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const Mechanism mm = parse_mechanism(v[i], join(path, "mechanism") + "[" + std::to_string(i) + "]");
        mech->values.push_back({lower(to_string(mm)), mm});
      }
      if (mech->values.empty()) fail("'" + join(path, "mechanism") + "' must not be empty");
    } else {
      m.mechanism = parse_mechanism(v, join(path, "mechanism"));
    }
  }
  if (mech && mech->values.empty()) mech->values.push_back({"", m.mechanism});
  if (obj.contains("pi_miss")) {
    const auto& v = obj["pi_miss"];
    if (v.is_array()) {
      if (!pi) fail("'" + join(path, "pi_miss") + "' cannot be a list here");
      pi->listed = true;
      for (double d : as_numbers(v, join(path, "pi_miss"))) pi->values.push_back({"pi-" + number_label(d), d});
      if (pi->values.empty()) fail("'" + join(path, "pi_miss") + "' must not be empty");
    } else {
      m.pi_miss = as_number(v, join(path, "pi_miss"));
    }
  }
  if (pi && pi->values.empty()) pi->values.push_back({"", m.pi_miss});
  if (obj.contains("pattern_set")) {
    const std::string s = as_string(obj["pattern_set"], join(path, "pattern_set"));
    if (s == "single-variable") {
      m.pattern_set = PatternSet::SingleVariable;
    } else if (s == "all-subsets") {
      m.pattern_set = PatternSet::AllSubsets;
    } else {
      fail("'" + join(path, "pattern_set") + "' must be single-variable or all-subsets");
    }
  }
  if (obj.contains("patterns")) {
    const auto& arr = obj["patterns"];
    if (!arr.is_array()) fail("'" + join(path, "patterns") + "' must be an array of arrays");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = join(path, "patterns") + "[" + std::to_string(i) + "]";
      if (!arr[i].is_array()) fail("'" + ip + "' must be an array");
      std::vector<bool> pat;
      for (const auto& cell : arr[i]) {
        if (cell.is_boolean()) {
          pat.push_back(cell.get<bool>());
        } else if (cell.is_number_integer() && (cell.get<int>() == 0 || cell.get<int>() == 1)) {
          pat.push_back(cell.get<int>() == 1);
        } else {
          fail("'" + ip + "' entries must be 0/1 or booleans");
        }
      }
      m.patterns.push_back(std::move(pat));
    }
  }
  if (obj.contains("weights")) {
    const auto& arr = obj["weights"];
    if (!arr.is_array()) fail("'" + join(path, "weights") + "' must be an array of arrays");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      m.weights.push_back(as_numbers(arr[i], join(path, "weights") + "[" + std::to_string(i) + "]"));
    }
  }
  return m;
}

void parse_imputation(const json& obj, const std::string& path, ImputationOptions& o) {
  check_keys(obj, {"cycles", "mice_m", "forest_max_iter", "ridge", "forest"}, path);
  if (obj.contains("cycles")) o.cycles = static_cast<int>(as_integer(obj["cycles"], join(path, "cycles")));
  if (obj.contains("mice_m")) o.mice_m = static_cast<int>(as_integer(obj["mice_m"], join(path, "mice_m")));
  if (obj.contains("forest_max_iter")) {
    o.forest_max_iter = static_cast<int>(as_integer(obj["forest_max_iter"], join(path, "forest_max_iter")));
  }
  if (obj.contains("ridge")) o.ridge = as_number(obj["ridge"], join(path, "ridge"));
  if (obj.contains("forest")) {
    const auto& f = obj["forest"];
    const std::string fp = join(path, "forest");
    check_keys(f, {"n_trees", "max_depth", "min_leaf", "mtry", "max_bins"}, fp);
    if (f.contains("n_trees")) o.forest.n_trees = static_cast<int>(as_integer(f["n_trees"], join(fp, "n_trees")));
    if (f.contains("max_depth")) o.forest.max_depth = static_cast<int>(as_integer(f["max_depth"], join(fp, "max_depth")));
    if (f.contains("min_leaf")) o.forest.min_leaf = static_cast<int>(as_integer(f["min_leaf"], join(fp, "min_leaf")));
    if (f.contains("mtry")) o.forest.mtry = static_cast<int>(as_integer(f["mtry"], join(fp, "mtry")));
    if (f.contains("max_bins")) o.forest.max_bins = static_cast<int>(as_integer(f["max_bins"], join(fp, "max_bins")));
  }
  if (o.cycles < 1 || o.mice_m < 1 || o.forest_max_iter < 1) fail("'" + path + "' counts must be >= 1");
  if (o.forest.n_trees < 1 || o.forest.max_depth < 1 || o.forest.min_leaf < 1) {
    fail("'" + path + ".forest' sizes must be >= 1");
  }
}

void parse_lasso(const json& obj, const std::string& path, LassoOptions& o) {
  check_keys(obj, {"folds", "n_lambda", "lambda_min_ratio", "tol", "final_tol", "early_stop", "max_outer"}, path);
  if (obj.contains("folds")) o.folds = static_cast<int>(as_integer(obj["folds"], join(path, "folds")));
  if (obj.contains("n_lambda")) o.n_lambda = static_cast<int>(as_integer(obj["n_lambda"], join(path, "n_lambda")));
  if (obj.contains("lambda_min_ratio")) o.lambda_min_ratio = as_number(obj["lambda_min_ratio"], join(path, "lambda_min_ratio"));
  if (obj.contains("tol")) o.tol = as_number(obj["tol"], join(path, "tol"));
  if (obj.contains("final_tol")) o.final_tol = as_number(obj["final_tol"], join(path, "final_tol"));
  if (obj.contains("early_stop")) o.early_stop = as_bool(obj["early_stop"], join(path, "early_stop"));
  if (obj.contains("max_outer")) o.max_outer = static_cast<int>(as_integer(obj["max_outer"], join(path, "max_outer")));
}

void parse_sizing(const json& obj, const std::string& path, ScenarioConfig& cfg, bool& has_p, bool& has_phi) {
  check_keys(obj, {"p_params", "phi", "shrinkage", "r2_nagelkerke", "c_statistic", "delta_opt",
                   "intercept_margin", "r2_cs_digits", "n_min"},
             path);
  auto& s = cfg.sizing;
  has_p = obj.contains("p_params");
  has_phi = obj.contains("phi");
  if (has_p) s.p_params = static_cast<int>(as_integer(obj["p_params"], join(path, "p_params")));
  if (has_phi) s.phi = as_number(obj["phi"], join(path, "phi"));
  if (obj.contains("shrinkage")) s.shrinkage = as_number(obj["shrinkage"], join(path, "shrinkage"));
  if (obj.contains("r2_nagelkerke")) s.r2_nagelkerke = as_number(obj["r2_nagelkerke"], join(path, "r2_nagelkerke"));
  if (obj.contains("c_statistic")) s.c_statistic = as_number(obj["c_statistic"], join(path, "c_statistic"));
  if (obj.contains("delta_opt")) s.delta_opt = as_number(obj["delta_opt"], join(path, "delta_opt"));
  if (obj.contains("intercept_margin")) s.intercept_margin = as_number(obj["intercept_margin"], join(path, "intercept_margin"));
  if (obj.contains("r2_cs_digits")) s.r2_cs_digits = static_cast<int>(as_integer(obj["r2_cs_digits"], join(path, "r2_cs_digits")));
  if (obj.contains("n_min")) cfg.n_min_override = as_integer(obj["n_min"], join(path, "n_min"));
}

std::vector<ScenarioConfig> expand_scenario(const json& obj, const std::string& default_id) {
  check_keys(obj, kScenarioKeys, "");
  ScenarioConfig base;
  base.id = obj.contains("id") ? as_string(obj["id"], "id") : default_id;

  Axis<double> rho;
  base.pred = parse_predictors(obj.contains("predictors") ? obj["predictors"] : json::object(), "predictors", rho);
  Axis<std::vector<double>> betas;
  base.out = parse_outcome(obj.contains("outcome") ? obj["outcome"] : json::object(), "outcome", betas);
  if (obj.contains("n_target")) base.n_target = static_cast<Index>(as_integer(obj["n_target"], "n_target"));

  bool has_p = false;
  bool has_phi = false;
  base.sizing.r2_nagelkerke = 0.15;
  if (obj.contains("sizing")) {
    const auto& sz = obj["sizing"];
    if (sz.is_object() && (sz.contains("r2_nagelkerke") || sz.contains("c_statistic"))) base.sizing.r2_nagelkerke.reset();
    parse_sizing(sz, "sizing", base, has_p, has_phi);
  }
  if (!has_p) base.sizing.p_params = static_cast<int>(base.pred.design_width());
  if (!has_phi) base.sizing.phi = base.out.target_prevalence;

  if (obj.contains("deltas")) base.deltas = as_numbers(obj["deltas"], "deltas");

  Axis<Mechanism> mech;
  Axis<double> pi;
  enum class TargetKind { None, Same, Explicit } target_kind = TargetKind::None;
  if (obj.contains("missingness")) {
    const auto& m = obj["missingness"];
    check_keys(m, {"development", "target"}, "missingness");
    if (m.contains("development")) {
      base.miss_dev = parse_missingness(m["development"], "missingness.development", &mech, &pi);
    }
    if (m.contains("target")) {
      const auto& t = m["target"];
      if (t.is_string()) {
        const std::string s = t.get<std::string>();
        if (s == "none") {
          target_kind = TargetKind::None;
        } else if (s == "same") {
          target_kind = TargetKind::Same;
        } else {
          fail("'missingness.target' must be \"none\", \"same\" or an object");
        }
      } else {
        target_kind = TargetKind::Explicit;
        base.miss_target = parse_missingness(t, "missingness.target", nullptr, nullptr);
      }
    }
  }
  if (mech.values.empty()) mech.values.push_back({"", base.miss_dev.mechanism});
  if (pi.values.empty()) pi.values.push_back({"", base.miss_dev.pi_miss});

  if (obj.contains("methods")) base.methods = as_strings(obj["methods"], "methods");
  if (obj.contains("families")) {
    base.families.clear();
    for (const auto& f : as_strings(obj["families"], "families")) base.families.push_back(model_family_from_string(f));
  }
  if (obj.contains("repeats")) base.repeats = static_cast<int>(as_integer(obj["repeats"], "repeats"));
  if (obj.contains("base_seed")) {
    const auto& v = obj["base_seed"];
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail("'base_seed' must be a non-negative integer");
    }
    base.base_seed = v.get<std::uint64_t>();
  }
  if (obj.contains("eval_modes")) {
    base.eval_modes.clear();
    for (const auto& m : as_strings(obj["eval_modes"], "eval_modes")) {
      if (m == "ideal") {
        base.eval_modes.push_back(EvalMode::Ideal);
      } else if (m == "pragmatic") {
        base.eval_modes.push_back(EvalMode::Pragmatic);
      } else {
        fail("'eval_modes' entries must be ideal or pragmatic");
      }
    }
  }
  if (obj.contains("target_population")) {
    const std::string s = as_string(obj["target_population"], "target_population");
    if (s == "per-repeat") {
      base.target_population = TargetPopulationMode::PerRepeat;
    } else if (s == "shared") {
      base.target_population = TargetPopulationMode::Shared;
    } else {
      fail("'target_population' must be per-repeat or shared");
    }
  }
  if (obj.contains("pooling")) {
    const std::string s = as_string(obj["pooling"], "pooling");
    if (s == "coefficients") {
      base.pooling = PoolingMode::Coefficients;
    } else if (s == "predictions") {
      base.pooling = PoolingMode::Predictions;
    } else {
      fail("'pooling' must be coefficients or predictions");
    }
  }
  if (obj.contains("target_mice_use_outcome")) {
    base.target_mice_use_outcome = as_bool(obj["target_mice_use_outcome"], "target_mice_use_outcome");
  }
  if (obj.contains("slope_band")) {
    const auto band = as_numbers(obj["slope_band"], "slope_band");
    if (band.size() != 2) fail("'slope_band' must have two entries");
    base.slope_band = {band[0], band[1]};
  }
  if (obj.contains("thresholds")) base.thresholds = as_numbers(obj["thresholds"], "thresholds");
  if (obj.contains("imputation")) parse_imputation(obj["imputation"], "imputation", base.imputation);
  if (obj.contains("lasso")) parse_lasso(obj["lasso"], "lasso", base.lasso);

  std::vector<ScenarioConfig> out;
  for (const auto& [beta_label, beta] : betas.values) {
    for (const auto& [rho_label, rho_value] : rho.values) {
      for (const auto& [mech_label, mech_value] : mech.values) {
        for (const auto& [pi_label, pi_value] : pi.values) {
          ScenarioConfig cfg = base;
          cfg.out.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
          cfg.pred.rho = rho_value;
          cfg.miss_dev.mechanism = mech_value;
          cfg.miss_dev.pi_miss = pi_value;
          if (target_kind == TargetKind::Same) cfg.miss_target = cfg.miss_dev;
          for (const std::string* label : {&beta_label, &rho_label, &mech_label, &pi_label}) {
            if (!label->empty()) cfg.id += "_" + *label;
          }
          try {
            cfg.validate();
          } catch (const Error& e) {
            throw Error(ErrorKind::Config, "config: scenario '" + cfg.id + "': " + e.what());
          }
          out.push_back(std::move(cfg));
        }
      }
    }
  }
  return out;
}

SearchTargets parse_search(const json& obj) {
  check_keys(obj, {"median_slope_min", "assurance_min", "max_evpi", "evpi_thresholds",
                   "assurance_margin_vs_fully_observed"},
             "search");
  SearchTargets t;
  if (obj.contains("median_slope_min")) t.median_slope_min = as_number(obj["median_slope_min"], "search.median_slope_min");
  if (obj.contains("assurance_min")) t.assurance_min = as_number(obj["assurance_min"], "search.assurance_min");
  if (obj.contains("max_evpi")) t.max_evpi = as_number(obj["max_evpi"], "search.max_evpi");
  if (obj.contains("evpi_thresholds")) t.evpi_thresholds = as_numbers(obj["evpi_thresholds"], "search.evpi_thresholds");
  if (obj.contains("assurance_margin_vs_fully_observed")) {
    t.assurance_margin_vs_fully_observed =
        as_number(obj["assurance_margin_vs_fully_observed"], "search.assurance_margin_vs_fully_observed");
  }
  return t;
}

}  // namespace

LoadedConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("top level must be an object");
  std::set<std::string> top = kScenarioKeys;
  top.insert({"scenarios", "search"});
  check_keys(doc, top, "");

  LoadedConfig loaded;
  json defaults = doc;
  defaults.erase("scenarios");
  defaults.erase("search");
  try {
    if (doc.contains("scenarios")) {
      const auto& arr = doc["scenarios"];
      if (!arr.is_array() || arr.empty()) fail("'scenarios' must be a non-empty array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_object()) fail("'scenarios[" + std::to_string(i) + "]' must be an object");
        json merged = defaults;
        merged.merge_patch(arr[i]);
        auto cells = expand_scenario(merged, "scenario" + std::to_string(i + 1));
        for (auto& c : cells) loaded.scenarios.push_back(std::move(c));
      }
    } else {
      loaded.scenarios = expand_scenario(defaults, "scenario");
    }
    if (doc.contains("search")) loaded.search = parse_search(doc["search"]);
  } catch (const json::exception& e) {
    fail(std::string("malformed value: ") + e.what());
  }

  std::set<std::string> ids;
  for (const auto& s : loaded.scenarios) {
    if (!ids.insert(s.id).second) fail("duplicate scenario id '" + s.id + "'");
  }
  loaded.canonical = doc.dump();
  loaded.hash = hash_bytes(loaded.canonical);
  return loaded;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace mdsize
