#include "slp/pipeline.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace slp {

SessionDataset combined_train(const SplitDataset& split) {
  SessionDataset combined;
  for (const auto& [uid, sessions] : split.train.by_user())
    for (const auto& s : sessions) combined.add(s);
  for (const auto& [uid, sessions] : split.validation.by_user())
    for (const auto& s : sessions) combined.add(s);
  combined.renumber();
  return combined;
}

namespace {

const Session& session_at(const SessionDataset& ds, const std::string& uid, int index) {
  const auto* sessions = ds.find_user(uid);
  if (!sessions || index < 1 || index > static_cast<int>(sessions->size()))
    throw std::out_of_range("no session " + std::to_string(index) + " for user " + uid);
  return (*sessions)[static_cast<std::size_t>(index - 1)];
}

double log_mean(const SessionDataset& ds) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [uid, sessions] : ds.by_user())
    for (const auto& s : sessions) {
      sum += s.log_length;
      ++n;
    }
  if (n == 0) throw std::invalid_argument("empty dataset");
  return sum / static_cast<double>(n);
}

std::unordered_map<std::string, int> user_index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);
  return index;
}

// lambda is irrelevant here; only the centered plug-in estimate matters.
VarianceComponents safe_variance_components(const SessionDataset& train) {
  try {
    return estimate_variance_components(train);
  } catch (const std::runtime_error&) {
    VarianceComponents vc;  // no user has 2+ sessions; keep lambda = 1
    vc.global_mean = log_mean(train);
    return vc;
  }
}

struct PreparedPart {
  DesignMatrix design;
  std::vector<int> row_user;                 // -1 for users absent from training
  Eigen::VectorXd actual_seconds;
  Eigen::VectorXd centered_log;
};

struct Prepared {
  std::vector<std::string> user_ids;
  Standardizer standardizer;
  PreparedPart train, other;
};

// Features with `train_ds` as the training set and `other` as the
// validation-or-test part; standardizer fit on train.
Prepared prepare(const SessionDataset& train_ds, const SessionDataset& other,
                 const FeatureSchema& schema, const UserAttributes& attrs,
                 double global_mean) {
  SplitDataset view;
  view.train = train_ds;
  view.test = other;
  FeatureTables tables = build_features(view, schema, attrs);

  Prepared prep;
  for (const auto& [uid, sessions] : train_ds.by_user()) prep.user_ids.push_back(uid);
  auto index = user_index_of(prep.user_ids);

  auto fill = [&](PreparedPart& part, const FeatureTable& table,
                  const SessionDataset& ds) {
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    part.actual_seconds.resize(n);
    part.centered_log.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& row = table.rows[static_cast<std::size_t>(r)];
      const Session& s = session_at(ds, row.user_id, row.session_index);
      part.actual_seconds(r) = s.raw_length;
      part.centered_log(r) = s.log_length - global_mean;
      auto it = index.find(row.user_id);
      part.row_user.push_back(it == index.end() ? -1 : it->second);
    }
  };

  auto [std_, dm] = fit_standardizer(tables.train);
  prep.standardizer = std_;
  prep.train.design = std::move(dm);
  fill(prep.train, tables.train, train_ds);
  prep.other.design = apply_standardizer(prep.standardizer, tables.test);
  fill(prep.other, tables.test, other);
  return prep;
}

double alpha_anchor(Family family, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (family == Family::Model2L1)
    return 2.0 * (x.transpose() * y).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.transpose() * x,
                                                    Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 1e-9);
}

}  // namespace

TrainedModel fit_family(Family family, const SplitDataset& split,
                        const FeatureSchema& schema, const UserAttributes& attrs,
                        const FitOptions& options) {
  TrainedModel model;
  model.family = family;
  model.schema = schema;
  model.lognormal_correction = options.lognormal_correction;
  model.trained_on_combined = options.refit_on_combined;

  const SessionDataset final_train =
      options.refit_on_combined ? combined_train(split) : split.train;

  if (family == Family::Baseline) {
    model.baseline = BaselinePredictor::fit(final_train);
    model.vc = safe_variance_components(final_train);
    return model;
  }

  if (family == Family::Model1) {
    model.vc = estimate_variance_components(final_train);
    Model1Fit m1 = model1_fit(final_train, model.vc);
    model.fit.oracle = OracleSpec::none();
    model.fit.config.lambda = model.vc.lambda();
    model.fit.converged = true;
    model.fit.mu.resize(static_cast<Eigen::Index>(m1.mu.size()));
    Eigen::Index i = 0;
    for (const auto& [uid, mu] : m1.mu) {
      model.user_ids.push_back(uid);
      model.fit.mu(i++) = mu;
    }
    return model;
  }

  // Covariate families: tune on train/validation, then refit.
  VarianceComponents vc_tune = safe_variance_components(split.train);
  Prepared tune = prepare(split.train, split.validation, schema, attrs,
                          vc_tune.global_mean);
  TrainingData td;
  td.x_train = tune.train.design.X;
  td.x_valid = tune.other.design.X;
  td.y_train = tune.train.centered_log;
  td.train_user = tune.train.row_user;
  td.valid_user = tune.other.row_user;
  td.valid_actual_seconds = tune.other.actual_seconds;
  td.n_users = static_cast<int>(tune.user_ids.size());
  td.global_mean = vc_tune.global_mean;

  Grid grid = options.grid
                  ? *options.grid
                  : Grid::defaults(family, vc_tune.lambda(),
                                   alpha_anchor(family, td.x_train, td.y_train));
  if (!options.lambdas.empty()) grid.lambdas = options.lambdas;
  if (!options.alphas.empty()) grid.alphas = options.alphas;
  if (!options.deltas.empty()) grid.deltas = options.deltas;
  if (!options.gbt.empty()) grid.gbt = options.gbt;
  GridSearchResult search = grid_search(family, grid, td, options.warm_starts);
  model.grid_path = search.path;
  model.chosen.lambda = search.config.lambda;
  model.chosen.alpha = search.oracle.alpha;
  model.chosen.delta = search.config.delta;
  model.chosen.gbt = search.oracle.gbt;
  model.chosen.valid_mae = search.valid_mae;

  model.vc = safe_variance_components(final_train);
  SessionDataset empty;
  Prepared final_prep = prepare(final_train, empty, schema, attrs,
                                model.vc.global_mean);
  model.standardizer = final_prep.standardizer;
  model.feature_names = final_prep.train.design.column_names;
  model.user_ids = final_prep.user_ids;
  model.fit = bcd_fit(final_prep.train.design.X, final_prep.train.centered_log,
                      final_prep.train.row_user,
                      static_cast<int>(final_prep.user_ids.size()),
                      search.oracle, search.config);
  return model;
}

std::vector<PredictionRow> predict_test(const TrainedModel& model,
                                        const SplitDataset& split,
                                        const UserAttributes& attrs) {
  std::vector<PredictionRow> out;
  const SessionDataset train_ds =
      model.trained_on_combined ? combined_train(split) : split.train;

  if (!model.uses_covariates()) {
    auto index = user_index_of(model.user_ids);
    for (const auto& [uid, sessions] : split.test.by_user()) {
      for (const auto& s : sessions) {
        PredictionRow row{uid, s.session_index, 0.0, s.raw_length};
        if (model.family == Family::Baseline) {
          row.predicted_seconds = model.baseline.predict(uid);
        } else {
          auto it = index.find(uid);
          double mu = it == index.end() ? 0.0 : model.fit.mu(it->second);
          row.predicted_seconds =
              predict_seconds(model.vc.global_mean, mu, model.lognormal_correction,
                              model.vc.sigma1_sq);
        }
        out.push_back(std::move(row));
      }
    }
    return out;
  }

  SplitDataset view;
  view.train = train_ds;
  view.test = split.test;
  FeatureTables tables = build_features(view, model.schema, attrs);
  DesignMatrix dm = apply_standardizer(model.standardizer, tables.test);
  auto index = user_index_of(model.user_ids);
  for (Eigen::Index r = 0; r < dm.X.rows(); ++r) {
    const auto& frow = dm.rows[static_cast<std::size_t>(r)];
    auto it = index.find(frow.user_id);
    int user = it == index.end() ? -1 : it->second;
    double log_pred = predict_log(model.fit, dm.X.row(r).transpose(), user);
    const Session& s = session_at(split.test, frow.user_id, frow.session_index);
    out.push_back({frow.user_id, frow.session_index,
                   predict_seconds(model.vc.global_mean, log_pred,
                                   model.lognormal_correction, model.vc.sigma1_sq),
                   s.raw_length});
  }
  return out;
}

EvalReport evaluate(const TrainedModel& model, const SplitDataset& split,
                    const UserAttributes& attrs) {
  auto rows = predict_test(model, split, attrs);
  if (rows.empty()) throw std::runtime_error("empty test set");

  const SessionDataset norm_train = combined_train(split);
  BaselinePredictor baseline = BaselinePredictor::fit(norm_train);

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd model_preds(n), baseline_preds(n), actual(n);
  std::vector<std::string> row_users;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    model_preds(k) = r.predicted_seconds;
    baseline_preds(k) = baseline.predict(r.user_id);
    actual(k) = r.actual_seconds;
    row_users.push_back(r.user_id);
  }

  std::map<std::string, int> train_counts;
  for (const auto& [uid, sessions] : norm_train.by_user())
    train_counts[uid] = static_cast<int>(sessions.size());

  EvalReport report;
  report.n_test_sessions = rows.size();
  report.mae_seconds = mae(model_preds, actual);
  report.baseline_mae_seconds = mae(baseline_preds, actual);
  report.normalized_mae = normalized_mae(model_preds, baseline_preds, actual);
  report.deciles = decile_breakdown(model_preds, baseline_preds, actual, row_users,
                                    train_counts);
  if (family_is_linear(model.family) && model.fit.beta.size() > 0)
    report.importance = feature_importance(model.fit.beta, model.feature_names);
  return report;
}

}  // namespace slp
