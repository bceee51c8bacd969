#include "mdsize/serialize.hpp"

#include <json.hpp>

namespace mdsize {

using json = nlohmann::json;

namespace {

json vec_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json linear_to_json(const std::optional<LinearImputationModel>& m) {
  if (!m) return nullptr;
  return {{"coef", vec_to_json(m->coef)},
          {"sigma", m->sigma},
          {"with_outcome", m->with_outcome},
          {"ridge_used", m->ridge_used}};
}

std::optional<LinearImputationModel> linear_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  LinearImputationModel m;
  m.coef = vec_from_json(j.at("coef"));
  m.sigma = j.at("sigma").get<double>();
  m.with_outcome = j.at("with_outcome").get<bool>();
  m.ridge_used = j.at("ridge_used").get<bool>();
  return m;
}

json linear_set_to_json(const std::vector<std::vector<std::optional<LinearImputationModel>>>& sets) {
  json out = json::array();
  for (const auto& set : sets) {
    json row = json::array();
    for (const auto& m : set) row.push_back(linear_to_json(m));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<std::optional<LinearImputationModel>>> linear_set_from_json(const json& j) {
  std::vector<std::vector<std::optional<LinearImputationModel>>> out;
  for (const auto& row : j) {
    std::vector<std::optional<LinearImputationModel>> set;
    for (const auto& m : row) set.push_back(linear_from_json(m));
    out.push_back(std::move(set));
  }
  return out;
}

json forest_to_json(const std::optional<RegressionForest>& f) {
  if (!f) return nullptr;
  json trees = json::array();
  for (const auto& tree : f->trees()) {
    json nodes = json::array();
    for (const auto& n : tree) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return {{"n_features", f->n_features()}, {"trees", std::move(trees)}};
}

std::optional<RegressionForest> forest_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  RegressionForest f;
  f.set_n_features(j.at("n_features").get<Index>());
  for (const auto& tree : j.at("trees")) {
    std::vector<RegressionForest::Node> nodes;
    for (const auto& n : tree) {
      RegressionForest::Node node;
      node.feature = n.at(0).get<std::int32_t>();
      node.threshold = n.at(1).get<double>();
      node.left = n.at(2).get<std::int32_t>();
      node.right = n.at(3).get<std::int32_t>();
      node.value = n.at(4).get<double>();
      nodes.push_back(node);
    }
    f.mutable_trees().push_back(std::move(nodes));
  }
  return f;
}

json parse_artifact(const std::string& text, const char* kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Io, std::string("artifact: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != kind) {
    throw Error(ErrorKind::Io, std::string("artifact: expected a ") + kind + " artifact");
  }
  if (j.value("version", 0) != kArtifactVersion) {
    throw Error(ErrorKind::Io, "artifact: unsupported version " + std::to_string(j.value("version", 0)));
  }
  return j;
}

}  // namespace

std::string model_to_json(const FittedModel& model) {
  json j;
  j["kind"] = "fitted-model";
  j["version"] = kArtifactVersion;
  j["family"] = to_string(model.family);
  j["intercept"] = model.intercept;
  j["coef"] = vec_to_json(model.coef);
  j["selected"] = model.selected;
  j["converged"] = model.converged;
  j["iterations"] = model.iterations;
  j["lambda"] = model.lambda;
  j["deviance"] = model.deviance;
  j["score_max_abs"] = model.score_max_abs;
  j["separation"] = model.separation;
  j["aic_path"] = model.aic_path;
  return j.dump();
}

FittedModel model_from_json(const std::string& text) {
  const json j = parse_artifact(text, "fitted-model");
  try {
    FittedModel m;
    m.family = model_family_from_string(j.at("family").get<std::string>());
    m.intercept = j.at("intercept").get<double>();
    m.coef = vec_from_json(j.at("coef"));
    m.selected = j.at("selected").get<std::vector<bool>>();
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<int>();
    m.lambda = j.at("lambda").get<double>();
    m.deviance = j.at("deviance").get<double>();
    m.score_max_abs = j.at("score_max_abs").get<double>();
    m.separation = j.at("separation").get<bool>();
    m.aic_path = j.at("aic_path").get<std::vector<double>>();
    if (static_cast<Index>(m.selected.size()) != m.coef.size()) {
      throw Error(ErrorKind::Io, "artifact: selected and coef lengths differ");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("artifact: malformed model: ") + e.what());
  }
}

std::string imputer_to_json(const FittedImputer& imp) {
  json j;
  j["kind"] = "fitted-imputer";
  j["version"] = kArtifactVersion;
  j["method"] = to_string(imp.method);
  j["means"] = vec_to_json(imp.means);
  j["m"] = imp.m;
  j["cycles"] = imp.cycles;
  j["include_outcome"] = imp.include_outcome;
  json groups = json::array();
  for (const auto& g : imp.groups) {
    groups.push_back({{"name", g.name}, {"columns", g.columns}, {"categorical", g.categorical}});
  }
  j["groups"] = std::move(groups);
  json reg = json::array();
  for (const auto& m : imp.regression) reg.push_back(linear_to_json(m));
  j["regression"] = std::move(reg);
  json forests = json::array();
  for (const auto& f : imp.forests) forests.push_back(forest_to_json(f));
  j["forests"] = std::move(forests);
  j["mice_development"] = linear_set_to_json(imp.mice_development);
  j["mice_application"] = linear_set_to_json(imp.mice_application);
  j["warnings"] = imp.warnings;
  return j.dump();
}

FittedImputer imputer_from_json(const std::string& text) {
  const json j = parse_artifact(text, "fitted-imputer");
  try {
    FittedImputer imp;
    imp.method = imputation_method_from_string(j.at("method").get<std::string>());
    imp.means = vec_from_json(j.at("means"));
    imp.m = j.at("m").get<int>();
    imp.cycles = j.at("cycles").get<int>();
    imp.include_outcome = j.at("include_outcome").get<bool>();
    for (const auto& g : j.at("groups")) {
      ColumnGroup cg;
      cg.name = g.at("name").get<std::string>();
      cg.columns = g.at("columns").get<std::vector<Index>>();
      cg.categorical = g.at("categorical").get<bool>();
      imp.groups.push_back(std::move(cg));
    }
    for (const auto& m : j.at("regression")) imp.regression.push_back(linear_from_json(m));
    for (const auto& f : j.at("forests")) imp.forests.push_back(forest_from_json(f));
    imp.mice_development = linear_set_from_json(j.at("mice_development"));
    imp.mice_application = linear_set_from_json(j.at("mice_application"));
    imp.warnings = j.at("warnings").get<std::vector<std::string>>();
    return imp;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("artifact: malformed imputer: ") + e.what());
  }
}

}  // namespace mdsize
