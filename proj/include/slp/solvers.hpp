#pragma once

// Linear-link subproblem solvers: ridge via a cached eigendecomposition of
// the Gram matrix, and l1 via warm-started proximal gradient descent.

#include <Eigen/Dense>
#include <optional>

namespace slp {

// Eigendecomposition of Q = X^T X, computed once and reused across all
// penalty weights and outer iterations.
struct GramFactorization {
  Eigen::MatrixXd q;            // d x d, symmetric PSD
  Eigen::MatrixXd v;            // eigenvectors, columns
  Eigen::VectorXd gamma;        // eigenvalues, descending, clamped at 0
  double lipschitz = 0.0;       // C = 2 max gamma_i
};

enum class PenaltyKind { L2Squared, L1 };

struct LinearCoefficients {
  Eigen::VectorXd beta;
  PenaltyKind penalty = PenaltyKind::L2Squared;
  double alpha = 0.0;
  int iterations = 0;
  double final_change = 0.0;  // last relative objective change
  bool converged = true;
};

GramFactorization precompute_gram(const Eigen::MatrixXd& x);

// beta = V diag(1/(gamma_i + alpha)) V^T xtz, i.e. (X^T X + alpha I)^-1 X^T z.
LinearCoefficients ridge_solve(const GramFactorization& gf,
                               const Eigen::VectorXd& xtz, double alpha);

inline double soft_threshold(double a, double tau) {
  double m = std::abs(a) - tau;
  return m > 0 ? (a < 0 ? -m : m) : 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& a, double tau);

// Minimizes beta^T Q beta - 2 <xtz, beta> + alpha |beta|_1 with fixed step
// 1/C.  Stops when both the relative objective change and the KKT residual
// drop below tol; flagged unconverged at the iteration cap.
LinearCoefficients lasso_solve(const GramFactorization& gf,
                               const Eigen::VectorXd& xtz, double alpha,
                               std::optional<Eigen::VectorXd> warm_start = std::nullopt,
                               double tol = 1e-8, int max_iters = 10000);

double lasso_objective(const GramFactorization& gf, const Eigen::VectorXd& xtz,
                       double alpha, const Eigen::VectorXd& beta);

// Max over coordinates of the stationarity violation; an optimality
// certificate for the l1 subproblem.
double lasso_kkt_residual(const GramFactorization& gf, const Eigen::VectorXd& xtz,
                          double alpha, const Eigen::VectorXd& beta);

}  // namespace slp
