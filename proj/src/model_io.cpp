#include "slp/model_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace slp {

namespace {

using nlohmann::json;

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json to_json(const GbtParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"learning_rate", p.learning_rate},
          {"min_samples_leaf", p.min_samples_leaf},
          {"patience", p.patience},
          {"holdout_fraction", p.holdout_fraction}};
}

GbtParams gbt_params_from(const json& j) {
  GbtParams p;
  p.n_trees = j.at("n_trees").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.patience = j.at("patience").get<int>();
  p.holdout_fraction = j.at("holdout_fraction").get<double>();
  return p;
}

json to_json(const GbtModel& m) {
  json trees = json::array();
  for (const auto& tree : m.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return {{"base", m.base},
          {"learning_rate", m.learning_rate},
          {"n_features", m.n_features},
          {"trees", std::move(trees)}};
}

GbtModel gbt_model_from(const json& j) {
  GbtModel m;
  m.base = j.at("base").get<double>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.n_features = j.at("n_features").get<int>();
  for (const auto& tj : j.at("trees")) {
    RegressionTree tree;
    for (const auto& nj : tj) {
      TreeNode n;
      n.feature = nj.at(0).get<int>();
      n.threshold = nj.at(1).get<double>();
      n.left = nj.at(2).get<int>();
      n.right = nj.at(3).get<int>();
      n.value = nj.at(4).get<double>();
      tree.nodes.push_back(n);
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

// Infinity (delta with corruptions disabled) is not representable in JSON.
json finite_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}
double from_finite_or_null(const json& j) {
  return j.is_null() ? kNoCorruption : j.get<double>();
}

const char* oracle_tag(OracleSpec::Kind k) {
  switch (k) {
    case OracleSpec::Kind::None: return "none";
    case OracleSpec::Kind::Ridge: return "ridge";
    case OracleSpec::Kind::Lasso: return "lasso";
    case OracleSpec::Kind::Gbt: return "gbt";
  }
  return "none";
}

OracleSpec::Kind oracle_kind_from(const std::string& tag) {
  if (tag == "none") return OracleSpec::Kind::None;
  if (tag == "ridge") return OracleSpec::Kind::Ridge;
  if (tag == "lasso") return OracleSpec::Kind::Lasso;
  if (tag == "gbt") return OracleSpec::Kind::Gbt;
  throw std::runtime_error("corrupt model file: unknown oracle " + tag);
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["family"] = family_to_string(model.family);
  j["variance_components"] = {{"sigma0_sq", model.vc.sigma0_sq},
                              {"sigma1_sq", model.vc.sigma1_sq},
                              {"global_mean", model.vc.global_mean}};
  j["schema"] = {{"numeric", model.schema.numeric},
                 {"categorical", model.schema.categorical}};
  json levels = json::array();
  for (const auto& [name, lv] : model.standardizer.categorical_levels)
    levels.push_back({{"name", name}, {"levels", lv}});
  j["standardizer"] = {{"numeric_names", model.standardizer.numeric_names},
                       {"categorical_levels", std::move(levels)},
                       {"encoded_names", model.standardizer.encoded_names},
                       {"mean", to_json(model.standardizer.mean)},
                       {"norm", to_json(model.standardizer.norm)},
                       {"kept", model.standardizer.kept},
                       {"dropped", model.standardizer.dropped}};
  j["feature_names"] = model.feature_names;
  j["user_ids"] = model.user_ids;
  j["oracle"] = {{"kind", oracle_tag(model.fit.oracle.kind)},
                 {"alpha", model.fit.oracle.alpha},
                 {"gbt", to_json(model.fit.oracle.gbt)}};
  j["beta"] = to_json(model.fit.beta);
  j["gbt_model"] = to_json(model.fit.trees);
  j["mu"] = to_json(model.fit.mu);
  j["s"] = to_json(model.fit.s);
  j["config"] = {{"lambda", model.fit.config.lambda},
                 {"delta", finite_or_null(model.fit.config.delta)},
                 {"epsilon", model.fit.config.epsilon},
                 {"max_iters", model.fit.config.max_iters},
                 {"user_effects", model.fit.config.user_effects},
                 {"lasso_tol", model.fit.config.lasso_tol}};
  j["diagnostics"] = {{"objective_trace", model.fit.objective_trace},
                      {"converged", model.fit.converged},
                      {"oracle_calls", model.fit.oracle_calls}};
  j["chosen"] = {{"lambda", model.chosen.lambda},
                 {"alpha", model.chosen.alpha},
                 {"delta", finite_or_null(model.chosen.delta)},
                 {"gbt", to_json(model.chosen.gbt)},
                 {"valid_mae", model.chosen.valid_mae}};
  json base = json::object();
  for (const auto& [uid, mean] : model.baseline.user_mean_seconds) base[uid] = mean;
  j["baseline"] = {{"user_mean_seconds", std::move(base)},
                   {"global_mean_seconds", model.baseline.global_mean_seconds}};
  j["lognormal_correction"] = model.lognormal_correction;
  j["trained_on_combined"] = model.trained_on_combined;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path);
  out << j.dump(1) << '\n';
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt model file " + path + ": " + e.what());
  }
  try {
    int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw std::runtime_error("model file format version mismatch: got " +
                               std::to_string(version) + ", expected " +
                               std::to_string(kModelFormatVersion));

    TrainedModel m;
    m.format_version = version;
    m.family = family_from_string(j.at("family").get<std::string>());
    const auto& vc = j.at("variance_components");
    m.vc.sigma0_sq = vc.at("sigma0_sq").get<double>();
    m.vc.sigma1_sq = vc.at("sigma1_sq").get<double>();
    m.vc.global_mean = vc.at("global_mean").get<double>();
    m.schema.numeric = j.at("schema").at("numeric").get<std::vector<std::string>>();
    m.schema.categorical = j.at("schema").at("categorical").get<std::vector<std::string>>();
    const auto& st = j.at("standardizer");
    m.standardizer.numeric_names = st.at("numeric_names").get<std::vector<std::string>>();
    for (const auto& lj : st.at("categorical_levels"))
      m.standardizer.categorical_levels.emplace_back(
          lj.at("name").get<std::string>(),
          lj.at("levels").get<std::vector<std::string>>());
    m.standardizer.encoded_names = st.at("encoded_names").get<std::vector<std::string>>();
    m.standardizer.mean = vector_from(st.at("mean"));
    m.standardizer.norm = vector_from(st.at("norm"));
    m.standardizer.kept = st.at("kept").get<std::vector<int>>();
    m.standardizer.dropped = st.at("dropped").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.user_ids = j.at("user_ids").get<std::vector<std::string>>();
    m.fit.oracle.kind = oracle_kind_from(j.at("oracle").at("kind").get<std::string>());
    m.fit.oracle.alpha = j.at("oracle").at("alpha").get<double>();
    m.fit.oracle.gbt = gbt_params_from(j.at("oracle").at("gbt"));
    m.fit.beta = vector_from(j.at("beta"));
    m.fit.trees = gbt_model_from(j.at("gbt_model"));
    m.fit.mu = vector_from(j.at("mu"));
    m.fit.s = vector_from(j.at("s"));
    const auto& cfg = j.at("config");
    m.fit.config.lambda = cfg.at("lambda").get<double>();
    m.fit.config.delta = from_finite_or_null(cfg.at("delta"));
    m.fit.config.epsilon = cfg.at("epsilon").get<double>();
    m.fit.config.max_iters = cfg.at("max_iters").get<int>();
    m.fit.config.user_effects = cfg.at("user_effects").get<bool>();
    m.fit.config.lasso_tol = cfg.at("lasso_tol").get<double>();
    m.fit.objective_trace = j.at("diagnostics").at("objective_trace").get<std::vector<double>>();
    m.fit.converged = j.at("diagnostics").at("converged").get<bool>();
    m.fit.oracle_calls = j.at("diagnostics").at("oracle_calls").get<int>();
    const auto& ch = j.at("chosen");
    m.chosen.lambda = ch.at("lambda").get<double>();
    m.chosen.alpha = ch.at("alpha").get<double>();
    m.chosen.delta = from_finite_or_null(ch.at("delta"));
    m.chosen.gbt = gbt_params_from(ch.at("gbt"));
    m.chosen.valid_mae = ch.at("valid_mae").get<double>();
    for (const auto& [uid, mean] : j.at("baseline").at("user_mean_seconds").items())
      m.baseline.user_mean_seconds[uid] = mean.get<double>();
    m.baseline.global_mean_seconds = j.at("baseline").at("global_mean_seconds").get<double>();
    m.lognormal_correction = j.at("lognormal_correction").get<bool>();
    m.trained_on_combined = j.at("trained_on_combined").get<bool>();
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt model file " + path + ": " + e.what());
  }
}

}  // namespace slp
