#pragma once

// Hyperparameter grids with warm-started regularization paths, seconds-scale
// evaluation (MAE, normalized MAE, activity-decile breakdown) and feature
// importance for the linear links.

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "slp/dataset.hpp"
#include "slp/map_bcd.hpp"

namespace slp {

enum class Family {
  Baseline, Model1, Ridge, Model2L1, Model2L2, Model2Gbt, Model3L2, Model3Gbt
};

Family family_from_string(const std::string& tag);
std::string family_to_string(Family f);
bool family_uses_covariates(Family f);
bool family_uses_user_effects(Family f);  // false for Baseline / Ridge
bool family_uses_delta(Family f);
bool family_is_gbt(Family f);
bool family_is_linear(Family f);

struct Grid {
  std::vector<double> lambdas;
  std::vector<double> alphas;
  std::vector<double> deltas;       // empty unless the family tunes delta
  std::vector<GbtParams> gbt;       // empty unless the family is GBT

  // lambda_hat anchors the lambda grid for the linear families; alpha_max
  // anchors the alpha path (2 |X^T y|_inf for l1, the top Gram eigenvalue
  // for l2).
  static Grid defaults(Family f, double lambda_hat, double alpha_max);
};

std::vector<double> log_spaced(double lo, double hi, int count);

// Numeric view of a prepared split: centered log lengths, standardized
// covariates and integer user indices shared between the parts.
struct TrainingData {
  Eigen::MatrixXd x_train, x_valid;
  Eigen::VectorXd y_train;                 // centered log lengths
  std::vector<int> train_user, valid_user; // -1 for users absent from train
  Eigen::VectorXd valid_actual_seconds;
  int n_users = 0;
  double global_mean = 0.0;
};

struct GridPoint {
  double lambda = 0.0, alpha = 0.0, delta = kNoCorruption;
  GbtParams gbt;
  double valid_mae = 0.0;
  int iterations = 0;
  bool warm_started = false;
};

struct GridSearchResult {
  OracleSpec oracle;
  BcdConfig config;
  double valid_mae = 0.0;
  std::vector<GridPoint> path;
};

// Traverses the grid (alpha descending with warm starts for the linear
// families), selecting the validation-MAE minimizer; ties break toward
// heavier regularization (larger alpha, then lambda, then delta).
GridSearchResult grid_search(Family family, const Grid& grid, const TrainingData& td,
                             bool warm_starts = true);

struct BaselinePredictor {
  std::map<std::string, double> user_mean_seconds;
  double global_mean_seconds = 0.0;

  static BaselinePredictor fit(const SessionDataset& train);
  double predict(const std::string& user_id) const;
};

// exp(global_mean + centered_log_prediction); the lognormal mean correction
// multiplies by exp(sigma1_sq / 2) when enabled.
double predict_seconds(double global_mean, double centered_log_prediction,
                       bool lognormal_correction = false, double sigma1_sq = 0.0);

double mae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actual);
double normalized_mae(const Eigen::VectorXd& model_preds,
                      const Eigen::VectorXd& baseline_preds,
                      const Eigen::VectorXd& actual);

struct DecileGroup {
  std::string label;
  std::size_t n_sessions = 0;
  double normalized_mae = 0.0;
  bool present = false;
};

struct DecileBreakdown {
  double q10 = 0.0, q20 = 0.0;  // cutoffs on training sessions-per-user
  DecileGroup below_q10, below_q20, above_q20;
};

// Groups test users by their training session count: < q10, < q20
// (cumulative) and > q20, normalizing each group's MAE by the baseline
// restricted to the same group.
DecileBreakdown decile_breakdown(const Eigen::VectorXd& model_preds,
                                 const Eigen::VectorXd& baseline_preds,
                                 const Eigen::VectorXd& actual,
                                 const std::vector<std::string>& row_users,
                                 const std::map<std::string, int>& train_counts);

std::vector<std::pair<std::string, double>> feature_importance(
    const Eigen::VectorXd& beta, const std::vector<std::string>& names);

struct EvalReport {
  double mae_seconds = 0.0;
  double baseline_mae_seconds = 0.0;
  double normalized_mae = 0.0;
  std::size_t n_test_sessions = 0;
  DecileBreakdown deciles;
  std::vector<std::pair<std::string, double>> importance;  // linear families only

  std::string to_text() const;
  std::string to_csv() const;
};

}  // namespace slp
