#include "slp/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace slp {

Family family_from_string(const std::string& tag) {
  if (tag == "baseline") return Family::Baseline;
  if (tag == "model1") return Family::Model1;
  if (tag == "ridge") return Family::Ridge;
  if (tag == "model2-l1") return Family::Model2L1;
  if (tag == "model2-l2") return Family::Model2L2;
  if (tag == "model2-gbt") return Family::Model2Gbt;
  if (tag == "model3-l2") return Family::Model3L2;
  if (tag == "model3-gbt") return Family::Model3Gbt;
  throw std::invalid_argument("unknown model family: " + tag);
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::Baseline: return "baseline";
    case Family::Model1: return "model1";
    case Family::Ridge: return "ridge";
    case Family::Model2L1: return "model2-l1";
    case Family::Model2L2: return "model2-l2";
    case Family::Model2Gbt: return "model2-gbt";
    case Family::Model3L2: return "model3-l2";
    case Family::Model3Gbt: return "model3-gbt";
  }
  return "?";
}

bool family_uses_covariates(Family f) {
  return f != Family::Baseline && f != Family::Model1;
}
bool family_uses_user_effects(Family f) {
  return f != Family::Baseline && f != Family::Ridge;
}
bool family_uses_delta(Family f) {
  return f == Family::Model3L2 || f == Family::Model3Gbt;
}
bool family_is_gbt(Family f) {
  return f == Family::Model2Gbt || f == Family::Model3Gbt;
}
bool family_is_linear(Family f) {
  return f == Family::Ridge || f == Family::Model2L1 || f == Family::Model2L2 ||
         f == Family::Model3L2;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 1 || lo <= 0 || hi < lo) throw std::invalid_argument("bad log_spaced range");
  std::vector<double> out;
  if (count == 1) return {hi};
  double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) out.push_back(std::exp(std::log(lo) + i * step));
  return out;
}

Grid Grid::defaults(Family f, double lambda_hat, double alpha_max) {
  Grid g;
  if (family_is_gbt(f)) {
    for (int i = 0; i < 10; ++i) g.lambdas.push_back(1.0 + 9.0 * i / 9.0);
    for (int n_trees : {10, 15, 50, 100})
      for (int depth : {6, 10})
        for (double lr : {0.1, 0.05}) {
          GbtParams p;
          p.n_trees = n_trees;
          p.max_depth = depth;
          p.learning_rate = lr;
          g.gbt.push_back(p);
        }
  } else if (family_uses_user_effects(f)) {
    g.lambdas = log_spaced(lambda_hat / 10.0, 10.0 * lambda_hat, 10);
  } else {
    g.lambdas = {1.0};  // unused when mu is pinned at 0
  }
  if (family_is_linear(f))
    g.alphas = log_spaced(std::max(alpha_max * 1e-4, 1e-10), std::max(alpha_max, 1e-9), 50);
  if (family_uses_delta(f)) g.deltas = log_spaced(0.1, 10.0, 7);
  return g;
}

namespace {

double validation_mae(const FittedModel& model, const TrainingData& td) {
  Eigen::VectorXd preds(td.x_valid.rows());
  for (Eigen::Index r = 0; r < td.x_valid.rows(); ++r) {
    double log_pred = predict_log(model, td.x_valid.row(r).transpose(),
                                  td.valid_user[static_cast<std::size_t>(r)]);
    preds(r) = predict_seconds(td.global_mean, log_pred);
  }
  return mae(preds, td.valid_actual_seconds);
}

struct Candidate {
  GridPoint point;
  OracleSpec oracle;
  BcdConfig config;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.point.valid_mae != b.point.valid_mae) return a.point.valid_mae < b.point.valid_mae;
  if (a.point.alpha != b.point.alpha) return a.point.alpha > b.point.alpha;
  if (a.point.lambda != b.point.lambda) return a.point.lambda > b.point.lambda;
  return a.point.delta > b.point.delta;
}

}  // namespace

GridSearchResult grid_search(Family family, const Grid& grid, const TrainingData& td,
                             bool warm_starts) {
  if (family == Family::Baseline || family == Family::Model1)
    throw std::invalid_argument("grid_search applies to covariate families only");
  if (grid.lambdas.empty()) throw std::invalid_argument("empty lambda grid");

  const bool linear = family_is_linear(family);
  const bool is_gbt = family_is_gbt(family);
  if (linear && grid.alphas.empty()) throw std::invalid_argument("empty alpha grid");
  if (is_gbt && grid.gbt.empty()) throw std::invalid_argument("empty GBT grid");

  std::vector<double> deltas = family_uses_delta(family)
                                   ? grid.deltas
                                   : std::vector<double>{kNoCorruption};
  if (deltas.empty()) throw std::invalid_argument("empty delta grid");

  // Descending traversal so the warm-start chain runs from heavy to light
  // regularization and ties resolve toward heavier penalties.
  auto desc = [](std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  std::vector<double> lambdas = desc(grid.lambdas);
  std::vector<double> alphas = linear ? desc(grid.alphas) : std::vector<double>{0.0};
  std::vector<double> deltas_sorted = desc(deltas);
  std::vector<GbtParams> gbt_grid = is_gbt ? grid.gbt : std::vector<GbtParams>{{}};

  GramFactorization gram;
  if (linear) gram = precompute_gram(td.x_train);

  GridSearchResult result;
  bool have_best = false;
  Candidate best;

  for (double lambda : lambdas) {
    for (double delta : deltas_sorted) {
      for (const GbtParams& gp : gbt_grid) {
        BcdWarmStart warm;
        bool have_warm = false;
        for (double alpha : alphas) {
          OracleSpec oracle;
          if (family == Family::Ridge || family == Family::Model2L2 ||
              family == Family::Model3L2)
            oracle = OracleSpec::ridge(alpha);
          else if (family == Family::Model2L1)
            oracle = OracleSpec::lasso(alpha);
          else
            oracle = OracleSpec::boosted(gp);

          BcdConfig cfg;
          cfg.lambda = lambda;
          cfg.delta = delta;
          cfg.user_effects = family_uses_user_effects(family);

          const BcdWarmStart* ws = (warm_starts && linear && have_warm) ? &warm : nullptr;
          FittedModel model = bcd_fit(td.x_train, td.y_train, td.train_user,
                                      td.n_users, oracle, cfg,
                                      linear ? &gram : nullptr, ws);
          if (linear) {
            warm.beta = model.beta;
            have_warm = true;
          }

          Candidate cand;
          cand.oracle = oracle;
          cand.config = cfg;
          cand.point.lambda = lambda;
          cand.point.alpha = alpha;
          cand.point.delta = delta;
          cand.point.gbt = gp;
          cand.point.valid_mae = validation_mae(model, td);
          cand.point.iterations = static_cast<int>(model.objective_trace.size());
          cand.point.warm_started = ws != nullptr;
          result.path.push_back(cand.point);
          if (!have_best || better(cand, best)) {
            best = cand;
            have_best = true;
          }
        }
      }
    }
  }
  if (!have_best) throw std::runtime_error("all grid fits failed");
  result.oracle = best.oracle;
  result.config = best.config;
  result.valid_mae = best.point.valid_mae;
  return result;
}

BaselinePredictor BaselinePredictor::fit(const SessionDataset& train) {
  BaselinePredictor bp;
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& [uid, sessions] : train.by_user()) {
    double sum = 0.0;
    for (const auto& s : sessions) sum += s.raw_length;
    bp.user_mean_seconds[uid] = sum / static_cast<double>(sessions.size());
    total += sum;
    n += sessions.size();
  }
  if (n == 0) throw std::invalid_argument("empty training set");
  bp.global_mean_seconds = total / static_cast<double>(n);
  return bp;
}

double BaselinePredictor::predict(const std::string& user_id) const {
  auto it = user_mean_seconds.find(user_id);
  return it == user_mean_seconds.end() ? global_mean_seconds : it->second;
}

double predict_seconds(double global_mean, double centered_log_prediction,
                       bool lognormal_correction, double sigma1_sq) {
  double seconds = std::exp(global_mean + centered_log_prediction);
  if (lognormal_correction) seconds *= std::exp(sigma1_sq / 2.0);
  return seconds;
}

double mae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actual) {
  if (predictions.size() != actual.size()) throw std::invalid_argument("length mismatch");
  if (predictions.size() == 0) throw std::invalid_argument("empty vectors");
  return (predictions - actual).cwiseAbs().mean();
}

double normalized_mae(const Eigen::VectorXd& model_preds,
                      const Eigen::VectorXd& baseline_preds,
                      const Eigen::VectorXd& actual) {
  double base = mae(baseline_preds, actual);
  if (base == 0.0) throw std::runtime_error("baseline MAE is zero");
  return mae(model_preds, actual) / base;
}

DecileBreakdown decile_breakdown(const Eigen::VectorXd& model_preds,
                                 const Eigen::VectorXd& baseline_preds,
                                 const Eigen::VectorXd& actual,
                                 const std::vector<std::string>& row_users,
                                 const std::map<std::string, int>& train_counts) {
  std::vector<double> counts;
  counts.reserve(train_counts.size());
  for (const auto& [uid, c] : train_counts) counts.push_back(static_cast<double>(c));
  DecileBreakdown out;
  out.q10 = quantile(counts, 0.10);
  out.q20 = quantile(counts, 0.20);
  out.below_q10.label = "<q10";
  out.below_q20.label = "<q20";
  out.above_q20.label = ">q20";

  auto fill = [&](DecileGroup& g, auto member) {
    double model_err = 0.0, base_err = 0.0;
    std::size_t n = 0;
    for (Eigen::Index k = 0; k < actual.size(); ++k) {
      auto it = train_counts.find(row_users[static_cast<std::size_t>(k)]);
      if (it == train_counts.end()) continue;
      if (!member(static_cast<double>(it->second))) continue;
      model_err += std::abs(model_preds(k) - actual(k));
      base_err += std::abs(baseline_preds(k) - actual(k));
      ++n;
    }
    g.n_sessions = n;
    g.present = n > 0 && base_err > 0;
    if (g.present) g.normalized_mae = model_err / base_err;
  };
  fill(out.below_q10, [&](double c) { return c < out.q10; });
  fill(out.below_q20, [&](double c) { return c < out.q20; });  // cumulative
  fill(out.above_q20, [&](double c) { return c > out.q20; });
  return out;
}

std::vector<std::pair<std::string, double>> feature_importance(
    const Eigen::VectorXd& beta, const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(beta.size()) != names.size())
    throw std::invalid_argument("coefficient / name count mismatch");
  std::vector<std::pair<std::string, double>> ranked;
  for (Eigen::Index i = 0; i < beta.size(); ++i)
    ranked.emplace_back(names[static_cast<std::size_t>(i)], std::abs(beta(i)));
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "test sessions:      " << n_test_sessions << '\n';
  os << "MAE (seconds):      " << mae_seconds << '\n';
  os << "baseline MAE (s):   " << baseline_mae_seconds << '\n';
  os << "normalized MAE:     " << normalized_mae << '\n';
  os << "activity breakdown (train sessions-per-user cutoffs q10=" << deciles.q10
     << ", q20=" << deciles.q20 << "):\n";
  for (const DecileGroup* g : {&deciles.below_q10, &deciles.below_q20, &deciles.above_q20}) {
    os << "  " << g->label << ": ";
    if (g->present)
      os << "normalized MAE " << g->normalized_mae << " over " << g->n_sessions << " sessions\n";
    else
      os << "absent\n";
  }
  if (!importance.empty()) {
    os << "feature importance (|coefficient|):\n";
    for (const auto& [name, w] : importance) os << "  " << name << "  " << w << '\n';
  }
  return os.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "metric,value\n";
  os << "n_test_sessions," << n_test_sessions << '\n';
  os << "mae_seconds," << mae_seconds << '\n';
  os << "baseline_mae_seconds," << baseline_mae_seconds << '\n';
  os << "normalized_mae," << normalized_mae << '\n';
  for (const DecileGroup* g : {&deciles.below_q10, &deciles.below_q20, &deciles.above_q20})
    if (g->present)
      os << "normalized_mae[" << g->label << "]," << g->normalized_mae << '\n';
  for (const auto& [name, w] : importance) os << "importance[" << name << "]," << w << '\n';
  return os.str();
}

}  // namespace slp
