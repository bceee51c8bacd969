#include "mdsize/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace mdsize {

const char* to_string(EvalMode m) { return m == EvalMode::Ideal ? "ideal" : "pragmatic"; }

const char* to_string(PoolingMode m) {
  return m == PoolingMode::Coefficients ? "coefficients" : "predictions";
}

const char* to_string(TargetPopulationMode m) {
  return m == TargetPopulationMode::PerRepeat ? "per-repeat" : "shared";
}

const std::array<const char*, kMetricCount>& metric_names() {
  static const std::array<const char*, kMetricCount> names{
      "calibration_slope",
      "calibration_intercept",
      "oe_ratio",
      "c_statistic",
      "degradation_calibration_slope",
      "degradation_calibration_intercept",
      "degradation_oe_ratio",
      "degradation_c_statistic",
      "n_fit",
  };
  return names;
}

std::string CellRecord::flag_text() const {
  if (failed) return "failed:" + failure;
  if (flags.empty()) return "ok";
  std::string s;
  for (const auto& f : flags) {
    if (!s.empty()) s += ';';
    s += f;
  }
  return s;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void write_vector(std::ostringstream& os, const char* key, const std::vector<double>& v) {
  os << key << '=';
  for (double d : v) os << d << ',';
  os << ';';
}

void write_missingness(std::ostringstream& os, const char* key, const MissingnessSpec& m) {
  os << key << "{mech=" << to_string(m.mechanism) << ";pi=" << m.pi_miss
     << ";patterns=" << to_string(m.pattern_set) << ";explicit=";
  for (const auto& pat : m.patterns) {
    for (bool b : pat) os << (b ? '1' : '0');
    os << ',';
  }
  os << ";weights=";
  for (const auto& w : m.weights) {
    for (double d : w) os << d << ',';
    os << '|';
  }
  os << '}';
}

std::string missingness_key(const std::optional<MissingnessSpec>& m) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (m) {
    write_missingness(os, "miss", *m);
  } else {
    os << "none";
  }
  return os.str();
}

DataSet generate(const ScenarioConfig& cfg, const OutcomeSpec& out, Index n, Rng& rng) {
  if (cfg.pred.mode == PredictorMode::IndependentSummaries) {
    return generate_from_summaries(cfg.pred, out, n, rng);
  }
  return generate_population(cfg.pred, out, n, rng);
}

std::uint64_t method_code(const std::string& method) { return hash_bytes(method); }

CellRecord failure_record(const std::string& method, const std::string& family, EvalMode mode,
                          const std::string& stage, const std::string& cause) {
  CellRecord r;
  r.method = method;
  r.family = family;
  r.mode = mode;
  r.failed = true;
  r.failure = stage + ": " + cause;
  r.metrics.fill(kNaN);
  return r;
}

std::vector<EvalMode> modes_for(const ScenarioConfig& cfg, const std::string& method) {
  std::vector<EvalMode> out;
  for (EvalMode m : cfg.eval_modes) {
    // Without an imputer there is nothing to deploy on incomplete data.
    if (m == EvalMode::Pragmatic && method == kFullyObserved) continue;
    out.push_back(m);
  }
  return out;
}

void fill_metrics(CellRecord& r, const Evaluation& model, const Evaluation& ref, double n_fit) {
  const auto& mc = model.calibration;
  const auto& rc = ref.calibration;
  r.metrics[kSlope] = mc.slope;
  r.metrics[kIntercept] = mc.intercept;
  r.metrics[kOeRatio] = mc.oe_ratio;
  r.metrics[kCStatistic] = model.c_statistic;
  r.metrics[kDegSlope] = rc.slope - mc.slope;
  r.metrics[kDegIntercept] = rc.intercept - mc.intercept;
  r.metrics[kDegOeRatio] = rc.oe_ratio - mc.oe_ratio;
  r.metrics[kDegCStatistic] = degradation({MetricKind::CStatistic, ref.c_statistic},
                                          {MetricKind::CStatistic, model.c_statistic});
  r.metrics[kNFit] = n_fit;
  r.nb_model = model.net_benefit.nb;
  r.nb_reference = ref.net_benefit.nb;
  r.nb_treat_all = ref.net_benefit.nb_treat_all;
  if (!mc.slope_defined) r.flags.push_back("slope-undefined");
}

FittedModel fit_family(ModelFamily family, const DataSet& d, const ScenarioConfig& cfg,
                       std::uint64_t cv_seed) {
  switch (family) {
    case ModelFamily::Mle: return fit_logistic_mle(d.x, d.y);
    case ModelFamily::AicBackward: return fit_backward_aic(d.x, d.y);
    case ModelFamily::Lasso: {
      // Same stream for every completion and method: folds depend only on y.
      Rng cv = make_rng(cv_seed);
      return fit_lasso_cv(d.x, d.y, stratified_folds(d.y, cfg.lasso.folds, cv), cfg.lasso);
    }
  }
  throw Error(ErrorKind::Usage, "unknown model family");
}

}  // namespace

void ScenarioConfig::validate() const {
  pred.validate();
  if (out.beta.size() != pred.design_width()) {
    std::ostringstream msg;
    msg << "scenario '" << id << "': beta has " << out.beta.size() << " entries but the predictors imply "
        << pred.design_width() << " design columns";
    throw Error(ErrorKind::Shape, msg.str());
  }
  if (!(out.target_prevalence > 0.001 && out.target_prevalence < 0.999) && !out.beta0) {
    throw Error(ErrorKind::Config, "scenario '" + id + "': prevalence must lie in (0.001, 0.999)");
  }
  if (n_target < 2) throw Error(ErrorKind::Config, "scenario '" + id + "': n_target must be at least 2");
  if (repeats < 2) throw Error(ErrorKind::Config, "scenario '" + id + "': repeats must be >= 2 (assurance needs two draws)");
  if (deltas.empty()) throw Error(ErrorKind::Config, "scenario '" + id + "': deltas must not be empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 1.0)) throw Error(ErrorKind::Config, "scenario '" + id + "': every delta must be >= 1");
    if (i > 0 && !(deltas[i] > deltas[i - 1])) {
      throw Error(ErrorKind::Config, "scenario '" + id + "': deltas must be strictly ascending");
    }
  }
  if (methods.empty()) throw Error(ErrorKind::Config, "scenario '" + id + "': no methods requested");
  for (const auto& m : methods) {
    if (m != kFullyObserved) imputation_method_from_string(m);
  }
  if (families.empty()) throw Error(ErrorKind::Config, "scenario '" + id + "': no model families requested");
  if (eval_modes.empty()) throw Error(ErrorKind::Config, "scenario '" + id + "': no evaluation modes requested");
  const bool pragmatic =
      std::find(eval_modes.begin(), eval_modes.end(), EvalMode::Pragmatic) != eval_modes.end();
  if (pragmatic && !miss_target) {
    throw Error(ErrorKind::Config,
                "scenario '" + id + "': pragmatic evaluation requires target missingness (miss_target is none)");
  }
  if (!(miss_dev.pi_miss >= 0.0 && miss_dev.pi_miss < 1.0)) {
    throw Error(ErrorKind::Config, "scenario '" + id + "': development pi_miss must lie in [0, 1)");
  }
  if (miss_target && !(miss_target->pi_miss >= 0.0 && miss_target->pi_miss < 1.0)) {
    throw Error(ErrorKind::Config, "scenario '" + id + "': target pi_miss must lie in [0, 1)");
  }
  if (!(slope_band.first < slope_band.second)) {
    throw Error(ErrorKind::Config, "scenario '" + id + "': slope band must be an increasing interval");
  }
  if (thresholds.empty()) throw Error(ErrorKind::Config, "scenario '" + id + "': thresholds must not be empty");
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::Config, "scenario '" + id + "': thresholds must lie in (0, 1)");
  }
  if (lasso.folds < 2) throw Error(ErrorKind::Config, "scenario '" + id + "': lasso folds must be >= 2");
  if (n_min_override && *n_min_override < 1) {
    throw Error(ErrorKind::Config, "scenario '" + id + "': n_min must be positive");
  }
  if (!n_min_override) sizing.validate();
}

std::string data_key(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "p=" << cfg.pred.p << ";rho=" << cfg.pred.rho << ";mode=" << static_cast<int>(cfg.pred.mode) << ';';
  for (const auto& s : cfg.pred.summaries) {
    os << "var{" << s.name << ',' << static_cast<int>(s.kind) << ',' << s.mean << ',' << s.variance << ',';
    for (const auto& l : s.levels) os << l << ',';
    for (double q : s.proportions) os << q << ',';
    os << '}';
  }
  os << "beta=";
  for (Index j = 0; j < cfg.out.beta.size(); ++j) os << cfg.out.beta[j] << ',';
  os << ";beta0=";
  if (cfg.out.beta0) {
    os << *cfg.out.beta0;
  } else {
    os << "calibrated";
  }
  os << ";prev=" << cfg.out.target_prevalence << ";n_target=" << cfg.n_target
     << ";target_pop=" << to_string(cfg.target_population);
  return os.str();
}

std::string scenario_key(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << data_key(cfg) << ";dev=" << missingness_key(cfg.miss_dev) << ";target=" << missingness_key(cfg.miss_target);
  os << ";sizing{" << cfg.sizing.p_params << ',' << cfg.sizing.phi << ',' << cfg.sizing.shrinkage << ','
     << cfg.sizing.r2_nagelkerke.value_or(-1.0) << ',' << cfg.sizing.c_statistic.value_or(-1.0) << ','
     << cfg.sizing.delta_opt << ',' << cfg.sizing.intercept_margin << ',' << cfg.sizing.r2_cs_digits << '}';
  os << ";n_min=" << cfg.n_min_override.value_or(-1);
  write_vector(os, ";deltas", cfg.deltas);
  os << "methods=";
  for (const auto& m : cfg.methods) os << m << ',';
  os << ";families=";
  for (auto f : cfg.families) os << to_string(f) << ',';
  os << ";modes=";
  for (auto m : cfg.eval_modes) os << to_string(m) << ',';
  os << ";pooling=" << to_string(cfg.pooling) << ";use_outcome=" << cfg.target_mice_use_outcome;
  const auto& im = cfg.imputation;
  os << ";imp{" << im.cycles << ',' << im.mice_m << ',' << im.forest_max_iter << ',' << im.ridge << ','
     << im.forest.n_trees << ',' << im.forest.max_depth << ',' << im.forest.min_leaf << ','
     << im.forest.mtry << ',' << im.forest.max_bins << '}';
  const auto& la = cfg.lasso;
  os << ";lasso{" << la.folds << ',' << la.n_lambda << ',' << la.lambda_min_ratio << ',' << la.tol << ','
     << la.final_tol << ',' << la.early_stop << ',' << la.max_outer << '}';
  return os.str();
}

PreparedScenario prepare_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  PreparedScenario prep;
  prep.data_hash = hash_bytes(data_key(cfg));
  prep.scenario_hash = hash_bytes(scenario_key(cfg));
  prep.miss_dev_hash = hash_bytes(missingness_key(cfg.miss_dev));
  prep.miss_target_hash = hash_bytes(missingness_key(cfg.miss_target));

  if (cfg.out.beta0) {
    prep.beta0 = *cfg.out.beta0;
  } else {
    Rng rng = make_rng(derive_seed({cfg.base_seed, prep.data_hash, static_cast<std::uint64_t>(Stage::Calibration)}));
    prep.beta0 = calibrate_intercept(cfg.pred, cfg.out, rng);
  }

  if (cfg.n_min_override) {
    prep.n_min = *cfg.n_min_override;
  } else {
    prep.sizing = closed_form_min_n(cfg.sizing);
    prep.n_min = prep.sizing.n_min;
  }
  for (double d : cfg.deltas) prep.n_dev.push_back(delta_grid(prep.n_min, {d}).front());

  const int variables = static_cast<int>(cfg.pred.groups().size());
  prep.plan_dev = plan_amputation(cfg.miss_dev, variables);
  if (cfg.miss_target) prep.plan_target = plan_amputation(*cfg.miss_target, variables);
  return prep;
}

RepeatResult run_repeat(const ScenarioConfig& cfg, const PreparedScenario& prep, std::size_t delta_index,
                        int repeat) {
  RepeatResult rr;
  rr.scenario_id = cfg.id;
  rr.delta = cfg.deltas.at(delta_index);
  rr.n_dev = prep.n_dev.at(delta_index);
  rr.repeat = repeat;
  const auto rep = static_cast<std::uint64_t>(repeat);
  const auto n_dev = static_cast<std::uint64_t>(rr.n_dev);
  const std::uint64_t base = cfg.base_seed;

  auto fail_everything = [&](const std::string& stage, const std::string& cause) {
    for (EvalMode mode : cfg.eval_modes) {
      rr.records.push_back(failure_record(kReferenceMethod, kReferenceFamily, mode, stage, cause));
    }
    for (const auto& method : cfg.methods) {
      for (ModelFamily f : cfg.families) {
        for (EvalMode mode : modes_for(cfg, method)) {
          rr.records.push_back(failure_record(method, to_string(f), mode, stage, cause));
        }
      }
    }
  };

  OutcomeSpec out = cfg.out;
  out.beta0 = prep.beta0;
  DataSet target;
  DataSet dev;
  DataSet dev_amp;
  std::optional<DataSet> target_amp;
  Evaluation ref_eval;
  std::string stage = "target-population";
  try {
    const std::uint64_t target_rep = cfg.target_population == TargetPopulationMode::Shared ? 0 : rep + 1;
    Rng target_rng = make_rng(derive_seed(
        {base, prep.data_hash, target_rep, static_cast<std::uint64_t>(Stage::TargetPopulation)}));
    target = generate(cfg, out, cfg.n_target, target_rng);
    stage = "reference-evaluation";
    ref_eval = evaluate(target.y, *target.true_prob, cfg.thresholds);
    stage = "development-data";
    Rng dev_rng = make_rng(
        derive_seed({base, prep.data_hash, n_dev, rep, static_cast<std::uint64_t>(Stage::Development)}));
    dev = generate(cfg, out, static_cast<Index>(rr.n_dev), dev_rng);
    stage = "amputation";
    Rng amp_rng = make_rng(derive_seed({base, prep.data_hash, prep.miss_dev_hash, n_dev, rep,
                                        static_cast<std::uint64_t>(Stage::AmputeDevelopment)}));
    dev_amp = ampute(dev, prep.plan_dev, cfg.miss_dev.pi_miss, amp_rng);
    const bool pragmatic =
        std::find(cfg.eval_modes.begin(), cfg.eval_modes.end(), EvalMode::Pragmatic) != cfg.eval_modes.end();
    if (pragmatic) {
      Rng tamp_rng = make_rng(derive_seed({base, prep.data_hash, prep.miss_target_hash, target_rep,
                                           static_cast<std::uint64_t>(Stage::AmputeTarget)}));
      target_amp = ampute(target, *prep.plan_target, cfg.miss_target->pi_miss, tamp_rng);
    }
  } catch (const std::exception& e) {
    fail_everything(stage, e.what());
    return rr;
  }

  for (EvalMode mode : cfg.eval_modes) {
    CellRecord r;
    r.method = kReferenceMethod;
    r.family = kReferenceFamily;
    r.mode = mode;
    fill_metrics(r, ref_eval, ref_eval, kNaN);
    rr.records.push_back(std::move(r));
  }

  const std::uint64_t cv_seed =
      derive_seed({base, prep.data_hash, n_dev, rep, static_cast<std::uint64_t>(Stage::CrossValidation)});

  for (const auto& method : cfg.methods) {
    const auto modes = modes_for(cfg, method);
    auto fail_method = [&](const std::string& st, const std::string& cause) {
      for (ModelFamily f : cfg.families) {
        for (EvalMode mode : modes) rr.records.push_back(failure_record(method, to_string(f), mode, st, cause));
      }
    };

    std::vector<DataSet> completions;
    std::optional<FittedImputer> imputer;
    try {
      if (method == kFullyObserved) {
        completions.push_back(dev);
      } else if (method == "complete-case") {
        completions.push_back(complete_case_filter(dev_amp));
      } else {
        Rng imp_rng = make_rng(derive_seed({base, prep.scenario_hash, n_dev, rep,
                                            static_cast<std::uint64_t>(Stage::Imputation), method_code(method)}));
        auto fit = fit_and_complete(imputation_method_from_string(method), dev_amp, imp_rng, cfg.imputation);
        completions = std::move(fit.completed.sets);
        imputer = std::move(fit.imputer);
      }
    } catch (const std::exception& e) {
      fail_method("imputation", e.what());
      continue;
    }
    const double n_fit = static_cast<double>(completions.front().rows());

    for (ModelFamily family : cfg.families) {
      const std::string fam = to_string(family);
      std::vector<FittedModel> models;
      FittedModel pooled;
      try {
        for (const auto& c : completions) models.push_back(fit_family(family, c, cfg, cv_seed));
        pooled = pool_models(models, completions);
      } catch (const std::exception& e) {
        for (EvalMode mode : modes) rr.records.push_back(failure_record(method, fam, mode, "model-fit", e.what()));
        continue;
      }
      const bool by_prediction = cfg.pooling == PoolingMode::Predictions && models.size() > 1;

      for (EvalMode mode : modes) {
        CellRecord r;
        r.method = method;
        r.family = fam;
        r.mode = mode;
        std::string st = "evaluation";
        try {
          Vector probs;
          if (mode == EvalMode::Ideal) {
            if (by_prediction) {
              const Matrix* xs[] = {&target.x};
              probs = predict_averaged(models, xs);
            } else {
              probs = predict(pooled, target.x);
            }
            fill_metrics(r, evaluate(target.y, probs, cfg.thresholds), ref_eval, n_fit);
          } else if (!imputer) {
            // Complete-case models can only be applied to complete target rows.
            st = "apply-target";
            const DataSet sub = complete_case_filter(*target_amp);
            probs = predict(pooled, sub.x);
            st = "evaluation";
            const Evaluation ref_sub = evaluate(sub.y, *sub.true_prob, cfg.thresholds);
            fill_metrics(r, evaluate(sub.y, probs, cfg.thresholds), ref_sub, n_fit);
          } else {
            st = "apply-target";
            Rng apply_rng = make_rng(derive_seed({base, prep.scenario_hash, n_dev, rep,
                                                  static_cast<std::uint64_t>(Stage::ApplyTarget),
                                                  method_code(method)}));
            const bool use_outcome = imputer->method == ImputationMethod::Mice && cfg.target_mice_use_outcome;
            // Identical completions (nothing to impute) keep the single
            // prediction vector exactly rather than an average of copies.
            Vector first;
            Vector sum;
            bool all_same = true;
            std::size_t count = 0;
            apply_imputer_each(*imputer, *target_amp, use_outcome, apply_rng, [&](DataSet&& set) {
              const FittedModel& m = by_prediction ? models.at(count) : pooled;
              Vector p = predict(m, set.x);
              if (count == 0) {
                first = p;
                sum = std::move(p);
              } else {
                all_same = all_same && p == first;
                sum += p;
              }
              ++count;
            });
            probs = all_same ? first : Vector(sum / static_cast<double>(count));
            st = "evaluation";
            fill_metrics(r, evaluate(target.y, probs, cfg.thresholds), ref_eval, n_fit);
          }
        } catch (const std::exception& e) {
          rr.records.push_back(failure_record(method, fam, mode, st, e.what()));
          continue;
        }
        if (!pooled.converged) r.flags.insert(r.flags.begin(), "nonconverged");
        if (pooled.separation) r.flags.push_back("separation");
        rr.records.push_back(std::move(r));
      }
    }
  }
  return rr;
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) return kNaN;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<CellSummary> summarize(const std::vector<RepeatResult>& repeats, std::pair<double, double> slope_band,
                                   const std::vector<double>& thresholds) {
  using Key = std::tuple<std::string, std::string, int>;
  std::vector<Key> order;
  std::map<Key, std::vector<const CellRecord*>> groups;
  for (const auto& rr : repeats) {
    for (const auto& rec : rr.records) {
      Key k{rec.method, rec.family, static_cast<int>(rec.mode)};
      auto [it, inserted] = groups.try_emplace(k);
      if (inserted) order.push_back(k);
      it->second.push_back(&rec);
    }
  }
  std::vector<CellSummary> out;
  if (repeats.empty()) return out;
  const std::size_t nt = thresholds.size();
  for (const auto& k : order) {
    const auto& recs = groups[k];
    CellSummary s;
    s.scenario_id = repeats.front().scenario_id;
    s.delta = repeats.front().delta;
    s.n_dev = repeats.front().n_dev;
    s.method = std::get<0>(k);
    s.family = std::get<1>(k);
    s.mode = static_cast<EvalMode>(std::get<2>(k));
    s.thresholds = thresholds;
    s.attempted = static_cast<int>(recs.size());
    std::vector<const CellRecord*> ok;
    for (const auto* r : recs) {
      if (!r->failed) ok.push_back(r);
    }
    s.succeeded = static_cast<int>(ok.size());
    s.failure_rate = s.attempted > 0 ? 1.0 - static_cast<double>(s.succeeded) / s.attempted : 0.0;
    s.absent = s.succeeded < 2;
    if (s.absent) {
      s.assurance = kNaN;
      out.push_back(std::move(s));
      continue;
    }
    for (int m = 0; m < kMetricCount; ++m) {
      std::vector<double> v;
      for (const auto* r : ok) {
        if (std::isfinite(r->metrics[static_cast<std::size_t>(m)])) v.push_back(r->metrics[static_cast<std::size_t>(m)]);
      }
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      s.quantiles[static_cast<std::size_t>(m)] =
          Quantiles{quantile_sorted(v, 0.025), quantile_sorted(v, 0.25), quantile_sorted(v, 0.5),
                    quantile_sorted(v, 0.75), quantile_sorted(v, 0.975)};
    }
    int inside = 0;
    for (const auto* r : ok) {
      const double slope = r->metrics[kSlope];
      if (std::isfinite(slope) && slope >= slope_band.first && slope <= slope_band.second) ++inside;
    }
    s.assurance = static_cast<double>(inside) / static_cast<double>(ok.size());
    s.evpi.assign(nt, 0.0);
    s.nb_reference.assign(nt, 0.0);
    s.nb_model.assign(nt, 0.0);
    s.nb_treat_all.assign(nt, 0.0);
    for (const auto* r : ok) {
      for (std::size_t t = 0; t < nt; ++t) {
        s.nb_reference[t] += r->nb_reference[t];
        s.nb_model[t] += r->nb_model[t];
        s.nb_treat_all[t] += r->nb_treat_all[t];
        s.evpi[t] += r->nb_reference[t] - r->nb_model[t];
      }
    }
    const double count = static_cast<double>(ok.size());
    for (std::size_t t = 0; t < nt; ++t) {
      s.evpi[t] /= count;
      s.nb_reference[t] /= count;
      s.nb_model[t] /= count;
      s.nb_treat_all[t] /= count;
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

RunResults run_scenarios(const std::vector<ScenarioConfig>& scenarios, const RunOptions& opts) {
  RunResults results;
  for (const auto& cfg : scenarios) {
    results.prepared.push_back(prepare_scenario(cfg));
    const PreparedScenario& prep = results.prepared.back();
    for (std::size_t d = 0; d < cfg.deltas.size(); ++d) {
      std::vector<RepeatResult> cell(static_cast<std::size_t>(cfg.repeats));
      parallel_for(cell.size(), opts.workers,
                   [&](std::size_t r) { cell[r] = run_repeat(cfg, prep, d, static_cast<int>(r)); });
      auto summaries = summarize(cell, cfg.slope_band, cfg.thresholds);
      for (auto& s : summaries) results.summaries.push_back(std::move(s));
      for (auto& rr : cell) {
        for (auto& rec : rr.records) {
          rec.nb_model = {};
          rec.nb_reference = {};
          rec.nb_treat_all = {};
        }
        results.repeats.push_back(std::move(rr));
      }
      if (opts.progress) {
        std::ostringstream msg;
        msg << "scenario " << cfg.id << " delta " << cfg.deltas[d] << " (n_dev " << prep.n_dev[d] << ") done";
        opts.progress(msg.str());
      }
    }
  }
  return results;
}

std::vector<SearchResult> search_min_n(const std::vector<CellSummary>& summaries, const SearchTargets& targets) {
  if (!targets.any()) throw Error(ErrorKind::Config, "search: at least one target must be specified");
  using Key = std::tuple<std::string, std::string, std::string, int>;
  std::vector<Key> order;
  std::map<Key, std::vector<const CellSummary*>> groups;
  for (const auto& s : summaries) {
    if (s.method == kReferenceMethod) continue;
    Key k{s.scenario_id, s.method, s.family, static_cast<int>(s.mode)};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(&s);
  }

  auto max_evpi = [&](const CellSummary& s) {
    double worst = -std::numeric_limits<double>::infinity();
    for (double t : targets.evpi_thresholds) {
      for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
        if (std::abs(s.thresholds[i] - t) < 1e-9) worst = std::max(worst, s.evpi[i]);
      }
    }
    return worst;
  };

  std::vector<SearchResult> out;
  for (const auto& k : order) {
    auto cells = groups[k];
    std::sort(cells.begin(), cells.end(), [](const CellSummary* a, const CellSummary* b) { return a->delta < b->delta; });

    std::optional<double> assurance_floor = targets.assurance_min;
    if (targets.assurance_margin_vs_fully_observed) {
      const CellSummary* full = nullptr;
      for (const auto& s : summaries) {
        if (s.scenario_id == std::get<0>(k) && s.method == kFullyObserved && s.family == std::get<2>(k) &&
            s.mode == EvalMode::Ideal && !s.absent && (!full || s.delta > full->delta)) {
          full = &s;
        }
      }
      if (!full) {
        throw Error(ErrorKind::Config, "search: assurance margin target needs the fully-observed method in scenario '" +
                                           std::get<0>(k) + "'");
      }
      const double floor = full->assurance - *targets.assurance_margin_vs_fully_observed;
      assurance_floor = assurance_floor ? std::max(*assurance_floor, floor) : floor;
    }

    SearchResult best;
    best.scenario_id = std::get<0>(k);
    best.method = std::get<1>(k);
    best.family = std::get<2>(k);
    best.mode = static_cast<EvalMode>(std::get<3>(k));
    double best_shortfall = std::numeric_limits<double>::infinity();
    for (const auto* s : cells) {
      if (s->absent || !s->quantiles[kSlope]) continue;
      const double slope = s->quantiles[kSlope]->median;
      const double evpi = max_evpi(*s);
      double shortfall = 0.0;
      if (targets.median_slope_min) shortfall += std::max(0.0, *targets.median_slope_min - slope);
      if (assurance_floor) shortfall += std::max(0.0, *assurance_floor - s->assurance);
      if (targets.max_evpi) shortfall += std::max(0.0, evpi - *targets.max_evpi);
      const bool met = shortfall == 0.0;
      if (met || shortfall < best_shortfall) {
        best.achieved = met;
        best.delta = s->delta;
        best.n_dev = s->n_dev;
        best.median_slope = slope;
        best.assurance = s->assurance;
        best.max_evpi = evpi;
        best_shortfall = shortfall;
      }
      if (met) break;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace mdsize
