#pragma once

// Synthetic data generators for the hierarchical models; used by the
// property and acceptance suites and by the CLI `simulate` subcommand.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "slp/dataset.hpp"

namespace slp {

struct SimConfig {
  int n_users = 100;
  int min_sessions = 2;      // per-user counts drawn uniformly in range
  int max_sessions = 5;
  double sigma0 = 1.0;       // user-effect std dev
  double sigma1 = 1.0;       // within-user noise std dev
  double global_mean = 0.0;  // added to every log length
  int n_covariates = 0;      // 0 = Model-1-style data (no covariates)
  double beta_scale = 1.0;   // true coefficients drawn N(0, beta_scale^2)
  double corrupt_fraction = 0.0;  // fraction of sessions with an added spike
  double corrupt_magnitude = 0.0; // spike size, in units of sigma1
  std::uint64_t seed = 1;
};

struct SimulatedData {
  SessionDataset sessions;   // start times synthetic but strictly ordered per user
  Eigen::MatrixXd x;         // row per session, empty when n_covariates == 0
  std::vector<int> row_user;
  std::vector<std::string> user_ids;
  Eigen::VectorXd y;         // log lengths, row-aligned with x
  Eigen::VectorXd user_effects;   // true mu
  Eigen::VectorXd beta;           // true coefficients
  std::vector<int> corrupted;     // row indices that received a spike
};

SimulatedData simulate(const SimConfig& cfg);

}  // namespace slp
