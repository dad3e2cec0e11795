#pragma once

// Gaussian sequence-model estimators and the hierarchical per-user
// shrinkage model with method-of-moments variance components.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>

#include "slp/dataset.hpp"

namespace slp {

struct SequenceModelConfig {
  double a_squared;  // prior variance A^2 > 0
  double b_squared() const { return a_squared / (1.0 + a_squared); }
};

// (sigma0^2, sigma1^2) and the shrinkage strength lambda = sigma1^2/sigma0^2,
// plus the training mean of y used to center before fitting.
struct VarianceComponents {
  double sigma0_sq = 1.0;
  double sigma1_sq = 1.0;
  double global_mean = 0.0;
  double lambda() const { return sigma1_sq / sigma0_sq; }
};

struct Model1Fit {
  std::map<std::string, double> mu;  // shrunken centered user means
  std::map<std::string, int> session_count;
  VarianceComponents vc;
};

struct SequenceRisks {
  double ml, eb, bayes;
};

// Posterior-mean shrinkage (1 - 1/(1+A^2)) z.
Eigen::VectorXd bayes_sequence(const Eigen::VectorXd& z, double a_squared);

// James-Stein (1 - (n-2)/S) z with S = |z|^2; unclipped, n >= 3 required.
Eigen::VectorXd james_stein(const Eigen::VectorXd& z);

// Positive-part variant: shrinkage factor clipped at 0.
Eigen::VectorXd james_stein_positive(const Eigen::VectorXd& z);

// Monte Carlo squared-error risks of the ML, EB and Bayes estimators under
// mu ~ N(0, A^2 I), z|mu ~ N(mu, I).  Deterministic given the seed.
SequenceRisks simulate_sequence_risk(int n, double a_squared, int trials,
                                     std::uint64_t seed);

// Method-of-moments variance components from users with >= 2 sessions;
// negative moment estimates are clamped at eps_var.
VarianceComponents estimate_variance_components(const SessionDataset& train,
                                                double eps_var = 1e-6);

Model1Fit model1_fit(const SessionDataset& train, const VarianceComponents& vc);

// global_mean + shrunken user mean; throws for unknown users (callers fall
// back to the global mean).
double model1_predict(const Model1Fit& fit, const std::string& user_id);

}  // namespace slp
