#include "mdsize/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace mdsize {

const char* to_string(ImputationMethod m) {
  switch (m) {
    case ImputationMethod::CompleteCase: return "complete-case";
    case ImputationMethod::Mean: return "mean";
    case ImputationMethod::SingleRegression: return "single-regression";
    case ImputationMethod::RandomForest: return "random-forest";
    case ImputationMethod::Mice: return "mice";
  }
  return "?";
}

ImputationMethod imputation_method_from_string(const std::string& name) {
  if (name == "complete-case") return ImputationMethod::CompleteCase;
  if (name == "mean") return ImputationMethod::Mean;
  if (name == "single-regression") return ImputationMethod::SingleRegression;
  if (name == "random-forest") return ImputationMethod::RandomForest;
  if (name == "mice") return ImputationMethod::Mice;
  throw Error(ErrorKind::Config, "unknown imputation method '" + name + "'");
}

double LinearImputationModel::predict(const Matrix& x, Index row, Index target_col, double y) const {
  double s = coef[0];
  Index k = 1;
  for (Index c = 0; c < x.cols(); ++c) {
    if (c == target_col) continue;
    s += coef[k++] * x(row, c);
  }
  if (with_outcome) s += coef[k] * y;
  return s;
}

namespace {

struct ColumnRows {
  std::vector<std::vector<Index>> observed;
  std::vector<std::vector<Index>> missing;
};

ColumnRows split_rows(const DataSet& data) {
  ColumnRows cr;
  const Index p = data.cols();
  cr.observed.resize(static_cast<std::size_t>(p));
  cr.missing.resize(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      (data.observed(i, j) ? cr.observed : cr.missing)[static_cast<std::size_t>(j)].push_back(i);
    }
  }
  return cr;
}

std::vector<Index> incomplete_columns(const ColumnRows& cr) {
  std::vector<Index> cols;
  for (std::size_t j = 0; j < cr.missing.size(); ++j) {
    if (!cr.missing[j].empty()) cols.push_back(static_cast<Index>(j));
  }
  return cols;
}

Vector observed_means(const DataSet& data, const ColumnRows& cr) {
  Vector means(data.cols());
  for (Index j = 0; j < data.cols(); ++j) {
    const auto& rows = cr.observed[static_cast<std::size_t>(j)];
    if (rows.empty()) {
      throw Error(ErrorKind::DegenerateFit,
                  "imputation: column " + std::to_string(j + 1) + " has no observed values");
    }
    double s = 0.0;
    for (Index i : rows) s += data.x(i, j);
    means[j] = s / static_cast<double>(rows.size());
  }
  return means;
}

Matrix fill_with(const DataSet& data, const Vector& means) {
  Matrix xc = data.x;
  for (Index j = 0; j < data.cols(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      if (!data.observed(i, j)) xc(i, j) = means[j];
    }
  }
  return xc;
}

void add_warning(std::vector<std::string>& warnings, const std::string& w) {
  if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
}

/// Least-squares (or Bayesian-draw) regression of column j on the others.
LinearImputationModel fit_linear(const Matrix& xc, const Vector* y, Index j,
                                 const std::vector<Index>& rows, double ridge, Rng* draw,
                                 std::vector<std::string>& warnings) {
  const Index p = xc.cols();
  const Index q = p + (y ? 1 : 0);  // intercept + (p - 1) others [+ outcome]
  const Index n = static_cast<Index>(rows.size());
  Matrix design(n, q);
  Vector target(n);
  for (Index r = 0; r < n; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    design(r, 0) = 1.0;
    Index k = 1;
    for (Index c = 0; c < p; ++c) {
      if (c != j) design(r, k++) = xc(i, c);
    }
    if (y) design(r, k) = (*y)[i];
    target[r] = xc(i, j);
  }
  Matrix gram = design.transpose() * design;
  const Vector rhs = design.transpose() * target;

  LinearImputationModel model;
  model.with_outcome = y != nullptr;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    gram.diagonal().array() += ridge;
    llt.compute(gram);
    model.ridge_used = true;
    add_warning(warnings, "imputation: singular regression for column " + std::to_string(j + 1) +
                              "; ridge fallback applied");
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::RankDeficient,
                  "imputation: regression for column " + std::to_string(j + 1) + " is singular");
    }
  }
  const Vector beta = llt.solve(rhs);
  const double ss = (target - design * beta).squaredNorm();
  const double df = std::max<double>(static_cast<double>(n - q), 1.0);
  if (!draw) {
    model.coef = beta;
    model.sigma = std::sqrt(ss / df);
    return model;
  }
  std::chi_squared_distribution<double> chi2(df);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma_star = std::sqrt(ss / chi2(*draw));
  Vector z(q);
  for (Index k = 0; k < q; ++k) z[k] = normal(*draw);
  model.coef = beta + llt.matrixU().solve(z) * sigma_star;
  model.sigma = sigma_star;
  return model;
}

void snap_categorical(Matrix& xc, const DataSet& source, const std::vector<ColumnGroup>& groups) {
  for (const auto& g : groups) {
    if (!g.categorical || g.columns.empty()) continue;
    for (Index i = 0; i < xc.rows(); ++i) {
      bool missing = false;
      for (Index c : g.columns) missing = missing || !source.observed(i, c);
      if (!missing) continue;
      double reference = 1.0;
      for (Index c : g.columns) reference -= xc(i, c);
      double best = reference;
      Index best_col = -1;
      for (Index c : g.columns) {
        if (xc(i, c) > best) {
          best = xc(i, c);
          best_col = c;
        }
      }
      for (Index c : g.columns) xc(i, c) = c == best_col ? 1.0 : 0.0;
    }
  }
}

DataSet completed_copy(const DataSet& source, Matrix xc, const std::vector<ColumnGroup>& groups) {
  snap_categorical(xc, source, groups.empty() ? source.groups : groups);
  DataSet out;
  out.x = std::move(xc);
  out.observed = Mask::Constant(source.rows(), source.cols(), true);
  out.y = source.y;
  out.true_prob = source.true_prob;
  out.groups = source.groups;
  out.retained_fraction = source.retained_fraction;
  out.warnings = source.warnings;
  return out;
}

void check_fit_preconditions(const DataSet& data, ImputationMethod method) {
  data.check_shape();
  if (method == ImputationMethod::Mean) return;
  const Index complete = data.rows() - data.incomplete_rows();
  if (complete < 20 && data.rows() < 50) {
    throw Error(ErrorKind::DegenerateFit,
                "imputation: need >= 20 complete rows or >= 50 rows to fit an imputer");
  }
}

ImputationFit fit_mean(const DataSet& data, const ColumnRows& cr) {
  ImputationFit out;
  auto& imp = out.imputer;
  imp.method = ImputationMethod::Mean;
  imp.means = observed_means(data, cr);
  out.completed.sets.push_back(completed_copy(data, fill_with(data, imp.means), imp.groups));
  return out;
}

ImputationFit fit_regression(const DataSet& data, const ColumnRows& cr, const ImputationOptions& opts) {
  ImputationFit out;
  auto& imp = out.imputer;
  imp.method = ImputationMethod::SingleRegression;
  imp.means = observed_means(data, cr);
  imp.cycles = opts.cycles;
  imp.regression.resize(static_cast<std::size_t>(data.cols()));
  Matrix xc = fill_with(data, imp.means);
  const auto incomplete = incomplete_columns(cr);
  for (int cycle = 0; cycle < opts.cycles; ++cycle) {
    for (Index j : incomplete) {
      const auto sj = static_cast<std::size_t>(j);
      auto model = fit_linear(xc, nullptr, j, cr.observed[sj], opts.ridge, nullptr, imp.warnings);
      for (Index i : cr.missing[sj]) xc(i, j) = model.predict(xc, i, j, 0.0);
      imp.regression[sj] = std::move(model);
    }
  }
  // Complete columns still get a model so deployment data missing there can be filled.
  for (Index j = 0; j < data.cols(); ++j) {
    const auto sj = static_cast<std::size_t>(j);
    if (!imp.regression[sj]) {
      imp.regression[sj] = fit_linear(xc, nullptr, j, cr.observed[sj], opts.ridge, nullptr, imp.warnings);
    }
  }
  out.completed.sets.push_back(completed_copy(data, std::move(xc), imp.groups));
  return out;
}

Matrix without_column(const Matrix& xc, Index j) {
  Matrix out(xc.rows(), xc.cols() - 1);
  Index k = 0;
  for (Index c = 0; c < xc.cols(); ++c) {
    if (c != j) out.col(k++) = xc.col(c);
  }
  return out;
}

double forest_predict(const RegressionForest& forest, const Matrix& xc, Index i, Index j,
                      std::vector<double>& buffer) {
  buffer.resize(static_cast<std::size_t>(xc.cols() - 1));
  std::size_t k = 0;
  for (Index c = 0; c < xc.cols(); ++c) {
    if (c != j) buffer[k++] = xc(i, c);
  }
  return forest.predict(buffer.data(), 1);
}

ImputationFit fit_forest(const DataSet& data, const ColumnRows& cr, const ImputationOptions& opts, Rng& rng) {
  ImputationFit out;
  auto& imp = out.imputer;
  imp.method = ImputationMethod::RandomForest;
  imp.means = observed_means(data, cr);
  imp.cycles = opts.cycles;
  const auto p = static_cast<std::size_t>(data.cols());
  imp.forests.resize(p);

  Matrix xc = fill_with(data, imp.means);
  auto order = incomplete_columns(cr);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return cr.missing[static_cast<std::size_t>(a)].size() < cr.missing[static_cast<std::size_t>(b)].size();
  });

  std::vector<std::optional<RegressionForest>> current(p);
  double previous_diff = std::numeric_limits<double>::infinity();
  std::vector<double> buffer;
  for (int iter = 0; iter < opts.forest_max_iter && !order.empty(); ++iter) {
    const Matrix x_old = xc;
    for (Index j : order) {
      const auto sj = static_cast<std::size_t>(j);
      const Matrix features = without_column(xc, j);
      const Vector target = xc.col(j);
      Rng tree_rng = make_rng(rng());
      auto forest = RegressionForest::fit(features, target, cr.observed[sj], opts.forest, tree_rng);
      for (Index i : cr.missing[sj]) xc(i, j) = forest_predict(forest, xc, i, j, buffer);
      current[sj] = std::move(forest);
    }
    double num = 0.0;
    double den = 0.0;
    for (Index j : order) {
      for (Index i : cr.missing[static_cast<std::size_t>(j)]) {
        const double d = xc(i, j) - x_old(i, j);
        num += d * d;
        den += xc(i, j) * xc(i, j);
      }
    }
    const double diff = den > 0.0 ? num / den : 0.0;
    if (diff > previous_diff) {
      // Keep the previous iteration's imputations and forests.
      xc = x_old;
      break;
    }
    previous_diff = diff;
    imp.forests = current;
    if (diff == 0.0) break;
  }
  out.completed.sets.push_back(completed_copy(data, std::move(xc), imp.groups));
  return out;
}

ImputationFit fit_mice(const DataSet& data, const ColumnRows& cr, const ImputationOptions& opts, Rng& rng) {
  ImputationFit out;
  auto& imp = out.imputer;
  imp.method = ImputationMethod::Mice;
  imp.means = observed_means(data, cr);
  imp.cycles = opts.cycles;
  imp.m = opts.mice_m;
  imp.include_outcome = true;
  const Index p = data.cols();
  const auto incomplete = incomplete_columns(cr);
  imp.mice_development.resize(static_cast<std::size_t>(opts.mice_m));
  imp.mice_application.resize(static_cast<std::size_t>(opts.mice_m));

  for (int t = 0; t < opts.mice_m; ++t) {
    Rng stream = make_rng(rng());
    auto& dev = imp.mice_development[static_cast<std::size_t>(t)];
    auto& app = imp.mice_application[static_cast<std::size_t>(t)];
    dev.resize(static_cast<std::size_t>(p));
    app.resize(static_cast<std::size_t>(p));

    Matrix xc = data.x;
    for (Index j : incomplete) {
      const auto& obs = cr.observed[static_cast<std::size_t>(j)];
      std::uniform_int_distribution<std::size_t> pick(0, obs.size() - 1);
      for (Index i : cr.missing[static_cast<std::size_t>(j)]) xc(i, j) = data.x(obs[pick(stream)], j);
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int cycle = 0; cycle < opts.cycles; ++cycle) {
      for (Index j : incomplete) {
        const auto sj = static_cast<std::size_t>(j);
        auto model = fit_linear(xc, &data.y, j, cr.observed[sj], opts.ridge, &stream, imp.warnings);
        for (Index i : cr.missing[sj]) {
          xc(i, j) = model.predict(xc, i, j, data.y[i]) + model.sigma * normal(stream);
        }
        dev[sj] = std::move(model);
      }
    }
    for (Index j = 0; j < p; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (!dev[sj]) dev[sj] = fit_linear(xc, &data.y, j, cr.observed[sj], opts.ridge, &stream, imp.warnings);
      app[sj] = fit_linear(xc, nullptr, j, cr.observed[sj], opts.ridge, &stream, imp.warnings);
    }
    out.completed.sets.push_back(completed_copy(data, std::move(xc), imp.groups));
  }
  return out;
}

}  // namespace

DataSet complete_case_filter(const DataSet& data) {
  data.check_shape();
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(data.rows()));
  for (Index i = 0; i < data.rows(); ++i) {
    if (data.observed.row(i).all()) keep.push_back(i);
  }
  if (keep.empty()) {
    throw Error(ErrorKind::EmptyDataset, "complete-case: no rows without missing predictors");
  }
  DataSet out = data.select_rows(keep);
  out.retained_fraction = data.rows() > 0
                              ? static_cast<double>(keep.size()) / static_cast<double>(data.rows())
                              : 0.0;
  return out;
}

ImputationFit fit_and_complete(ImputationMethod method, const DataSet& data, Rng& rng,
                               const ImputationOptions& opts) {
  if (method == ImputationMethod::CompleteCase) {
    throw Error(ErrorKind::Usage, "complete-case is not an imputer; use complete_case_filter");
  }
  if (opts.cycles < 1 || opts.mice_m < 1) {
    throw Error(ErrorKind::Config, "imputation: cycles and m must be >= 1");
  }
  check_fit_preconditions(data, method);
  const ColumnRows cr = split_rows(data);
  ImputationFit fit;
  switch (method) {
    case ImputationMethod::Mean: fit = fit_mean(data, cr); break;
    case ImputationMethod::SingleRegression: fit = fit_regression(data, cr, opts); break;
    case ImputationMethod::RandomForest: fit = fit_forest(data, cr, opts, rng); break;
    case ImputationMethod::Mice: fit = fit_mice(data, cr, opts, rng); break;
    case ImputationMethod::CompleteCase: break;
  }
  fit.imputer.groups = data.groups;
  fit.completed.method = method;
  fit.completed.source = "development";
  return fit;
}

FittedImputer fit_imputer(ImputationMethod method, const DataSet& data, Rng& rng,
                          const ImputationOptions& opts) {
  return fit_and_complete(method, data, rng, opts).imputer;
}

void apply_imputer_each(const FittedImputer& imp, const DataSet& data, bool use_outcome, Rng& rng,
                        const std::function<void(DataSet&&)>& sink) {
  data.check_shape();
  if (data.cols() != imp.means.size()) {
    std::ostringstream msg;
    msg << "apply_imputer: data has " << data.cols() << " columns but the imputer was fit on "
        << imp.means.size();
    throw Error(ErrorKind::Shape, msg.str());
  }
  if (data.fully_observed()) {
    for (int t = 0; t < imp.m; ++t) sink(DataSet(data));
    return;
  }
  const ColumnRows cr = split_rows(data);
  const auto incomplete = incomplete_columns(cr);
  std::vector<std::string> warnings = data.warnings;
  auto emit = [&](DataSet&& set) {
    set.warnings = warnings;
    sink(std::move(set));
  };

  switch (imp.method) {
    case ImputationMethod::CompleteCase:
      throw Error(ErrorKind::Usage, "complete-case is not an imputer");
    case ImputationMethod::Mean:
      emit(completed_copy(data, fill_with(data, imp.means), imp.groups));
      break;
    case ImputationMethod::SingleRegression: {
      Matrix xc = fill_with(data, imp.means);
      for (int cycle = 0; cycle < imp.cycles; ++cycle) {
        for (Index j : incomplete) {
          const auto& model = imp.regression[static_cast<std::size_t>(j)];
          if (!model) continue;
          for (Index i : cr.missing[static_cast<std::size_t>(j)]) xc(i, j) = model->predict(xc, i, j, 0.0);
        }
      }
      emit(completed_copy(data, std::move(xc), imp.groups));
      break;
    }
    case ImputationMethod::RandomForest: {
      Matrix xc = fill_with(data, imp.means);
      std::vector<double> buffer;
      for (Index j : incomplete) {
        if (!imp.forests[static_cast<std::size_t>(j)]) {
          add_warning(warnings, "imputation: no forest for column " + std::to_string(j + 1) +
                                    "; mean used");
        }
      }
      for (int cycle = 0; cycle < imp.cycles; ++cycle) {
        for (Index j : incomplete) {
          const auto& forest = imp.forests[static_cast<std::size_t>(j)];
          if (!forest) continue;
          for (Index i : cr.missing[static_cast<std::size_t>(j)]) {
            xc(i, j) = forest_predict(*forest, xc, i, j, buffer);
          }
        }
      }
      emit(completed_copy(data, std::move(xc), imp.groups));
      break;
    }
    case ImputationMethod::Mice: {
      const auto& models = use_outcome ? imp.mice_development : imp.mice_application;
      for (int t = 0; t < imp.m; ++t) {
        Rng stream = make_rng(rng());
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix xc = fill_with(data, imp.means);
        const auto& set_models = models[static_cast<std::size_t>(t)];
        for (int cycle = 0; cycle < imp.cycles; ++cycle) {
          for (Index j : incomplete) {
            const auto& model = set_models[static_cast<std::size_t>(j)];
            if (!model) continue;
            for (Index i : cr.missing[static_cast<std::size_t>(j)]) {
              xc(i, j) = model->predict(xc, i, j, data.y[i]) + model->sigma * normal(stream);
            }
          }
        }
        emit(completed_copy(data, std::move(xc), imp.groups));
      }
      break;
    }
  }
}

CompletedData apply_imputer(const FittedImputer& imp, const DataSet& data, bool use_outcome, Rng& rng) {
  CompletedData out;
  out.method = imp.method;
  out.source = "target";
  apply_imputer_each(imp, data, use_outcome, rng, [&](DataSet&& set) { out.sets.push_back(std::move(set)); });
  return out;
}

}  // namespace mdsize
