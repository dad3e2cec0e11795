// Acceptance suite: one pass/fail line per criterion, exit status nonzero if
// any fail.  Takes the bundled toy event log as argv[1] for the end-to-end
// pipeline check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slp/dataset.hpp"
#include "slp/map_bcd.hpp"
#include "slp/pipeline.hpp"
#include "slp/shrinkage.hpp"
#include "slp/simulate.hpp"
#include "slp/solvers.hpp"
#include "slp/tuning.hpp"

using namespace slp;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Instance {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> row_user;
  int n_users = 0;
};

Instance random_instance(int n_users, int max_sessions, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, max_sessions);
  Instance inst;
  inst.n_users = n_users;
  std::vector<int> counts;
  int rows = 0;
  for (int i = 0; i < n_users; ++i) {
    counts.push_back(count(rng));
    rows += counts.back();
  }
  inst.x.resize(rows, d);
  inst.y.resize(rows);
  int r = 0;
  for (int i = 0; i < n_users; ++i)
    for (int j = 0; j < counts[static_cast<std::size_t>(i)]; ++j, ++r) {
      for (int c = 0; c < d; ++c) inst.x(r, c) = gauss(rng);
      inst.y(r) = gauss(rng);
      inst.row_user.push_back(i);
    }
  return inst;
}

// Exact joint ridge + user-effect minimum via the augmented normal equations.
double exact_ridge_user_objective(const Instance& inst, double alpha, double lambda) {
  const auto d = inst.x.cols();
  const auto n = static_cast<Eigen::Index>(inst.n_users);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(inst.y.size(), n);
  for (Eigen::Index k = 0; k < inst.y.size(); ++k)
    z(k, inst.row_user[static_cast<std::size_t>(k)]) = 1.0;
  Eigen::MatrixXd xt(inst.y.size(), d + n);
  xt << inst.x, z;
  Eigen::MatrixXd h = xt.transpose() * xt;
  h.topLeftCorner(d, d) += alpha * Eigen::MatrixXd::Identity(d, d);
  h.bottomRightCorner(n, n) += lambda * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd sol = h.ldlt().solve(xt.transpose() * inst.y);
  Eigen::VectorXd beta = sol.head(d);
  Eigen::VectorXd mu = sol.tail(n);
  return alpha * beta.squaredNorm() + lambda * mu.squaredNorm() +
         (inst.y - inst.x * beta - z * mu).squaredNorm();
}

// Independent cyclic coordinate-descent reference for the l1 subproblem.
Eigen::VectorXd coordinate_descent_lasso(const Eigen::MatrixXd& q,
                                         const Eigen::VectorXd& xtz, double alpha) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q.cols());
  for (int sweep = 0; sweep < 50000; ++sweep) {
    double max_move = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      if (q(j, j) <= 0) continue;
      double rho = xtz(j) - q.row(j).dot(beta) + q(j, j) * beta(j);
      double updated = soft_threshold(rho, alpha / 2.0) / q(j, j);
      max_move = std::max(max_move, std::abs(updated - beta(j)));
      beta(j) = updated;
    }
    if (max_move < 1e-14) break;
  }
  return beta;
}

void criterion1_sequence_risk() {
  auto start = Clock::now();
  SequenceRisks risks = simulate_sequence_risk(100, 1.0, 20000, 2024);
  double elapsed = seconds_since(start);
  double rel_gap = (risks.eb - risks.bayes) / risks.bayes;
  bool ok = risks.eb < risks.ml && rel_gap >= 0.01 && rel_gap <= 0.04 &&
            elapsed < 10.0;
  report(1, "sequence-model risk ordering and EB-Bayes gap", ok,
         "gap=" + fmt(rel_gap) + " vs 0.02 theory, " + fmt(elapsed) + "s");
}

void criterion2_huber_equivalence() {
  auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> delta_dist(0.1, 10.0);
  std::normal_distribution<double> gauss(0.0, 2.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    auto inst = random_instance(1 + rep % 20, 5, 1 + rep % 4, rng);
    double delta = delta_dist(rng);
    Eigen::VectorXd f(inst.y.size()), mu(inst.n_users);
    for (Eigen::Index k = 0; k < f.size(); ++k) f(k) = gauss(rng);
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = gauss(rng);
    Eigen::VectorXd s = s_step(inst.y - f, mu, inst.row_user, delta);
    double joint = objective(f, inst.y, inst.row_user, mu, s, 1.0, delta, 0.0);
    double huber_form =
        huber_objective(f, inst.y, inst.row_user, mu, 1.0, delta, 0.0);
    worst = std::max(worst, std::abs(joint - huber_form));
  }
  double elapsed = seconds_since(start);
  bool ok = worst <= 1e-10 && elapsed < 5.0;
  report(2, "corruption minimization equals the Huber objective", ok,
         "max |gap|=" + fmt(worst) + ", " + fmt(elapsed) + "s");
}

void criterion3_joint_minimizer() {
  auto start = Clock::now();
  std::mt19937_64 rng(102);
  double worst_rel = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = random_instance(5 + rep % 40, 4, 2 + rep % 4, rng);  // d + N <= 60
    double alpha = 0.1 + 0.2 * (rep % 5);
    double lambda = 0.5 + 0.5 * (rep % 3);
    BcdConfig cfg;
    cfg.lambda = lambda;
    cfg.epsilon = 1e-13;
    cfg.max_iters = 20000;
    auto fit = bcd_fit(inst.x, inst.y, inst.row_user, inst.n_users,
                       OracleSpec::ridge(alpha), cfg);
    double exact = exact_ridge_user_objective(inst, alpha, lambda);
    worst_rel = std::max(worst_rel,
                         std::abs(fit.objective_trace.back() - exact) /
                             std::max(1e-12, std::abs(exact)));
  }
  double elapsed = seconds_since(start);
  bool ok = worst_rel <= 1e-6 && elapsed < 5.0;
  report(3, "ridge-link coordinate descent reaches the exact joint minimum", ok,
         "max rel gap=" + fmt(worst_rel) + ", " + fmt(elapsed) + "s");
}

void criterion4_lasso_path() {
  auto start = Clock::now();
  std::mt19937_64 rng(103);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(60, 5);
  Eigen::VectorXd z(60);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = gauss(rng);
    z(r) = gauss(rng);
  }
  auto gf = precompute_gram(x);
  Eigen::VectorXd xtz = x.transpose() * z;
  double alpha_max = 2.0 * xtz.cwiseAbs().maxCoeff();

  double worst_obj = 0.0, worst_kkt = 0.0;
  std::optional<Eigen::VectorXd> warm;
  for (int k = 0; k < 10; ++k) {
    double alpha = alpha_max * std::pow(10.0, -3.0 * k / 9.0);
    auto sol = lasso_solve(gf, xtz, alpha, warm);
    warm = sol.beta;
    Eigen::VectorXd ref = coordinate_descent_lasso(gf.q, xtz, alpha);
    double ours = lasso_objective(gf, xtz, alpha, sol.beta);
    double theirs = lasso_objective(gf, xtz, alpha, ref);
    worst_obj = std::max(worst_obj, std::abs(ours - theirs) /
                                        std::max(1.0, std::abs(theirs)));
    worst_kkt = std::max(worst_kkt, lasso_kkt_residual(gf, xtz, alpha, sol.beta));
  }
  double elapsed = seconds_since(start);
  bool ok = worst_obj <= 1e-6 && worst_kkt <= 1e-6 && elapsed < 5.0;
  report(4, "warm-started l1 path matches the coordinate-descent reference", ok,
         "max rel obj gap=" + fmt(worst_obj) + ", max KKT=" + fmt(worst_kkt) +
             ", " + fmt(elapsed) + "s");
}

void criterion5_bcd_monotone() {
  std::mt19937_64 rng(104);
  bool monotone = true, stopped = true;
  for (int rep = 0; rep < 50; ++rep) {
    auto inst = random_instance(4 + rep % 12, 4, 2, rng);
    OracleSpec oracle = rep % 3 == 0   ? OracleSpec::none()
                        : rep % 3 == 1 ? OracleSpec::ridge(0.6)
                                       : OracleSpec::lasso(0.4);
    BcdConfig cfg;
    cfg.lambda = 1.0 + (rep % 4);
    if (rep % 2 == 0) cfg.delta = 0.7;
    auto fit = bcd_fit(inst.x, inst.y, inst.row_user, inst.n_users, oracle, cfg);
    for (std::size_t t = 1; t < fit.objective_trace.size(); ++t)
      if (fit.objective_trace[t] > fit.objective_trace[t - 1] + 1e-9)
        monotone = false;
    if (!fit.converged ||
        static_cast<int>(fit.objective_trace.size()) >= cfg.max_iters)
      stopped = false;
  }
  report(5, "objective trace non-increasing with the 0.01 stop rule firing",
         monotone && stopped,
         monotone ? (stopped ? "50 instances" : "stop rule missed")
                  : "trace increased");
}

void criterion6_shrinkage_efficacy() {
  int wins = 0;
  std::map<int, double> base_err_by_count, model_err_by_count;
  std::map<int, int> rows_by_count;
  for (int rep = 0; rep < 20; ++rep) {
    SimConfig cfg;
    cfg.n_users = 2000;
    cfg.min_sessions = 2;  // one held out: training counts span 1..5
    cfg.max_sessions = 6;
    cfg.sigma0 = 1.0;
    cfg.sigma1 = 1.0;
    cfg.seed = 500 + static_cast<std::uint64_t>(rep);
    auto sim = simulate(cfg);

    SessionDataset train;
    std::vector<std::pair<std::string, double>> heldout;  // (user, log length)
    for (const auto& [uid, sessions] : sim.sessions.by_user()) {
      for (std::size_t j = 0; j + 1 < sessions.size(); ++j) train.add(sessions[j]);
      heldout.emplace_back(uid, sessions.back().log_length);
    }
    train.renumber();

    auto vc = estimate_variance_components(train);
    auto fit = model1_fit(train, vc);
    double model_sse = 0.0, base_sse = 0.0;
    for (const auto& [uid, y_true] : heldout) {
      int n = fit.session_count.at(uid);
      double model_pred = model1_predict(fit, uid);
      // Per-user-mean baseline (the ML estimate).
      double base_pred = vc.global_mean +
                         fit.mu.at(uid) * (1.0 + vc.lambda() / n);
      double me = (model_pred - y_true) * (model_pred - y_true);
      double be = (base_pred - y_true) * (base_pred - y_true);
      model_sse += me;
      base_sse += be;
      model_err_by_count[n] += me;
      base_err_by_count[n] += be;
      rows_by_count[n] += 1;
    }
    if (model_sse < base_sse) ++wins;
  }

  // Aggregate per-training-count gain: largest for single-session users.
  double gain_n1 = 0.0;
  bool n1_largest = true;
  for (const auto& [n, rows] : rows_by_count) {
    double gain = (base_err_by_count[n] - model_err_by_count[n]) / rows;
    if (n == 1)
      gain_n1 = gain;
    else if (gain > gain_n1)
      n1_largest = false;
  }
  bool ok = wins >= 19 && n1_largest && gain_n1 > 0.0;
  report(6, "per-user shrinkage beats the unshrunk mean out of sample", ok,
         std::to_string(wins) + "/20 wins, n=1 gain=" + fmt(gain_n1));
}

void criterion7_robustness_efficacy() {
  int wins = 0;
  for (int rep = 0; rep < 20; ++rep) {
    SimConfig cfg;
    cfg.n_users = 120;
    cfg.min_sessions = 4;
    cfg.max_sessions = 7;
    cfg.sigma0 = 0.5;
    cfg.sigma1 = 0.5;
    cfg.n_covariates = 4;
    cfg.beta_scale = 0.5;
    cfg.seed = 700 + static_cast<std::uint64_t>(rep);
    auto sim = simulate(cfg);

    // Per-user holdout: last session tests, second-last validates.
    std::vector<int> part(sim.row_user.size(), 0);  // 0 train, 1 valid, 2 test
    {
      std::map<int, std::vector<int>> rows_of;
      for (std::size_t k = 0; k < sim.row_user.size(); ++k)
        rows_of[sim.row_user[k]].push_back(static_cast<int>(k));
      for (auto& [u, rows] : rows_of) {
        part[static_cast<std::size_t>(rows[rows.size() - 1])] = 2;
        part[static_cast<std::size_t>(rows[rows.size() - 2])] = 1;
      }
    }

    TrainingData td;
    std::vector<int> test_rows;
    std::vector<int> train_rows, valid_rows;
    for (std::size_t k = 0; k < part.size(); ++k)
      (part[k] == 0 ? train_rows : part[k] == 1 ? valid_rows : test_rows)
          .push_back(static_cast<int>(k));

    // Corrupt 10% of the training rows with +-8 sigma1 spikes.
    Eigen::VectorXd y = sim.y;
    std::mt19937_64 rng(9000 + static_cast<std::uint64_t>(rep));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int r : train_rows)
      if (unif(rng) < 0.10)
        y(r) += (unif(rng) < 0.5 ? -1.0 : 1.0) * 8.0 * cfg.sigma1;

    double mean = 0.0;
    for (int r : train_rows) mean += y(r);
    mean /= static_cast<double>(train_rows.size());
    td.global_mean = mean;
    td.n_users = cfg.n_users;
    td.x_train.resize(static_cast<Eigen::Index>(train_rows.size()), sim.x.cols());
    td.y_train.resize(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      td.x_train.row(static_cast<Eigen::Index>(i)) = sim.x.row(train_rows[i]);
      td.y_train(static_cast<Eigen::Index>(i)) = y(train_rows[i]) - mean;
      td.train_user.push_back(sim.row_user[static_cast<std::size_t>(train_rows[i])]);
    }
    td.x_valid.resize(static_cast<Eigen::Index>(valid_rows.size()), sim.x.cols());
    td.valid_actual_seconds.resize(static_cast<Eigen::Index>(valid_rows.size()));
    for (std::size_t i = 0; i < valid_rows.size(); ++i) {
      td.x_valid.row(static_cast<Eigen::Index>(i)) = sim.x.row(valid_rows[i]);
      td.valid_actual_seconds(static_cast<Eigen::Index>(i)) =
          std::exp(y(valid_rows[i]));
      td.valid_user.push_back(sim.row_user[static_cast<std::size_t>(valid_rows[i])]);
    }

    Grid grid;
    grid.lambdas = {0.5, 1.0, 2.0};
    grid.alphas = log_spaced(0.05, 20.0, 8);
    // Top of the range is wide enough that the robust family can fall back
    // to an effectively quadratic loss when corruption happens to be light.
    grid.deltas = log_spaced(0.1, 50.0, 8);

    auto test_mae_for = [&](Family family) {
      auto search = grid_search(family, grid, td);
      auto fit = bcd_fit(td.x_train, td.y_train, td.train_user, td.n_users,
                         search.oracle, search.config);
      double err = 0.0;
      for (int r : test_rows) {
        double log_pred = predict_log(fit, sim.x.row(r).transpose(), sim.row_user[static_cast<std::size_t>(r)]);
        err += std::abs(predict_seconds(mean, log_pred) - std::exp(y(r)));
      }
      return err / static_cast<double>(test_rows.size());
    };
    if (test_mae_for(Family::Model3L2) <= test_mae_for(Family::Model2L2) + 1e-9)
      ++wins;
  }
  report(7, "Huber-robust fit matches or beats the plain fit under corruption",
         wins >= 18, std::to_string(wins) + "/20 wins");
}

void criterion8_variance_consistency() {
  int hits = 0;
  for (int rep = 0; rep < 20; ++rep) {
    SimConfig cfg;
    cfg.n_users = 10000;
    cfg.min_sessions = 5;
    cfg.max_sessions = 5;
    cfg.sigma0 = 1.0;
    cfg.sigma1 = 1.0;
    cfg.seed = 800 + static_cast<std::uint64_t>(rep);
    auto sim = simulate(cfg);
    auto vc = estimate_variance_components(sim.sessions);
    if (std::abs(vc.sigma0_sq - 1.0) <= 0.05 && std::abs(vc.sigma1_sq - 1.0) <= 0.05)
      ++hits;
  }
  report(8, "moment estimators recover the variance components within 5%",
         hits >= 19, std::to_string(hits) + "/20 within tolerance");
}

void criterion9_end_to_end(const std::string& toy_log) {
  auto start = Clock::now();
  bool ok = false;
  std::string detail;
  try {
    auto events = parse_event_log(toy_log);
    auto sessions = sessionize(events);
    auto split = chronological_split(sessions);

    auto baseline = fit_family(Family::Baseline, split);
    auto baseline_report = evaluate(baseline, split);

    auto model = fit_family(Family::Model3L2, split);
    auto model_report = evaluate(model, split);

    double elapsed = seconds_since(start);
    ok = std::abs(baseline_report.normalized_mae - 1.0) < 1e-12 &&
         std::isfinite(model_report.normalized_mae) &&
         model_report.normalized_mae > 0.0 && elapsed < 30.0;
    detail = "baseline=" + fmt(baseline_report.normalized_mae) +
             ", robust model=" + fmt(model_report.normalized_mae) + ", " +
             fmt(elapsed) + "s";
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(9, "toy log runs the full pipeline with baseline at 1.000", ok, detail);
}

void criterion10_gbt_sanity() {
  std::mt19937_64 rng(110);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool monotone = true, depth0_exact = true;
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd x(60, 3);
    Eigen::VectorXd z(60);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = gauss(rng);
      z(r) = std::sin(x(r, 0)) + 0.3 * x(r, 1) + 0.2 * gauss(rng);
    }
    GbtParams params;
    params.n_trees = 25;
    params.max_depth = 1 + rep % 4;
    params.learning_rate = rep % 2 ? 0.1 : 0.5;
    auto model = gbt_fit(x, z, params);
    Eigen::VectorXd preds = Eigen::VectorXd::Constant(x.rows(), model.base);
    double prev = (z - preds).squaredNorm();
    for (const auto& tree : model.trees) {
      preds += model.learning_rate * tree.predict(x);
      double sse = (z - preds).squaredNorm();
      if (sse > prev + 1e-9) monotone = false;
      prev = sse;
    }

    GbtParams flat = params;
    flat.max_depth = 0;
    auto stump = gbt_fit(x, z, flat);
    if ((gbt_predict(stump, x).array() - z.mean()).abs().maxCoeff() != 0.0)
      depth0_exact = false;
  }
  report(10, "boosting error non-increasing and depth-0 equals the mean",
         monotone && depth0_exact,
         monotone ? (depth0_exact ? "5 fixtures" : "depth-0 mismatch")
                  : "round increased error");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <toy_events.tsv>\n";
    return 2;
  }
  criterion1_sequence_risk();
  criterion2_huber_equivalence();
  criterion3_joint_minimizer();
  criterion4_lasso_path();
  criterion5_bcd_monotone();
  criterion6_shrinkage_efficacy();
  criterion7_robustness_efficacy();
  criterion8_variance_consistency();
  criterion9_end_to_end(argv[1]);
  criterion10_gbt_sanity();
  std::cout << (g_failures == 0 ? "all criteria passed"
                                : std::to_string(g_failures) + " criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
