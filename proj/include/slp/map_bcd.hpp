#pragma once

// Block coordinate descent for joint MAP estimation over (f, mu, s):
// the link f comes from a pluggable oracle (ridge / lasso / GBT / none),
// mu are per-user residual effects and s absorbs sparse corruptions.

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "slp/gbt.hpp"
#include "slp/solvers.hpp"

namespace slp {

struct OracleSpec {
  enum class Kind { None, Ridge, Lasso, Gbt };
  Kind kind = Kind::None;
  double alpha = 1.0;  // penalty weight for the linear oracles
  GbtParams gbt;

  static OracleSpec none() { return {}; }
  static OracleSpec ridge(double alpha) { return {Kind::Ridge, alpha, {}}; }
  static OracleSpec lasso(double alpha) { return {Kind::Lasso, alpha, {}}; }
  static OracleSpec boosted(const GbtParams& p) { return {Kind::Gbt, 0.0, p}; }
};

constexpr double kNoCorruption = std::numeric_limits<double>::infinity();

struct BcdConfig {
  double lambda = 1.0;                // user-effect penalty sigma1^2/sigma0^2
  double delta = kNoCorruption;       // Huber crossover; infinity disables s
  double epsilon = 0.01;              // relative objective-change stop rule
  int max_iters = 100;
  bool user_effects = true;           // false pins mu at 0 (Ridge / SIGIR cases)
  double lasso_tol = 1e-8;
};

struct BcdWarmStart {
  Eigen::VectorXd beta;
};

struct FittedModel {
  OracleSpec oracle;
  Eigen::VectorXd beta;        // linear oracles
  GbtModel trees;              // GBT oracle
  Eigen::VectorXd mu;          // per-user, indexed by the caller's user ids
  Eigen::VectorXd s;           // per training row
  std::vector<double> objective_trace;
  BcdConfig config;
  bool converged = false;
  int oracle_calls = 0;

  // Link value f(x) for a standardized covariate row.
  double link(const Eigen::VectorXd& x) const;
};

// Eq.-12-style joint objective: squared residuals against f + mu + s,
// lambda |mu|^2, the oracle penalty omega, and 2 delta |s|_1 (the last term
// dropped when delta is infinite).
double objective(const Eigen::VectorXd& f_preds, const Eigen::VectorXd& y,
                 const std::vector<int>& row_user, const Eigen::VectorXd& mu,
                 const Eigen::VectorXd& s, double lambda, double delta,
                 double omega);

double huber(double a, double delta);

// Equivalent Huber form of the joint objective (corruptions minimized out).
double huber_objective(const Eigen::VectorXd& f_preds, const Eigen::VectorXd& y,
                       const std::vector<int>& row_user, const Eigen::VectorXd& mu,
                       double lambda, double delta, double omega);

// Closed-form user-effect update: mu_i = sum_j (r_ij - s_ij) / (n_i + lambda).
Eigen::VectorXd mu_step(const Eigen::VectorXd& residuals, const Eigen::VectorXd& s,
                        const std::vector<int>& row_user, int n_users, double lambda);

// Closed-form corruption update: s_ij = soft_threshold(r_ij - mu_i, delta).
Eigen::VectorXd s_step(const Eigen::VectorXd& residuals, const Eigen::VectorXd& mu,
                       const std::vector<int>& row_user, double delta);

// Algorithm: alternate oracle fit on z = y - mu - s, the closed-form mu
// update and the closed-form s update until the relative objective change
// drops to epsilon.  y must already be centered.
FittedModel bcd_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    const std::vector<int>& row_user, int n_users,
                    const OracleSpec& oracle, const BcdConfig& cfg,
                    const GramFactorization* gram = nullptr,
                    const BcdWarmStart* warm = nullptr);

// f(x) + mu_user; users outside the fit (user < 0 or >= size) get mu = 0.
double predict_log(const FittedModel& model, const Eigen::VectorXd& x, int user);

}  // namespace slp
