#include "slp/solvers.hpp"

#include <cmath>
#include <stdexcept>

namespace slp {

GramFactorization precompute_gram(const Eigen::MatrixXd& x) {
  if (x.cols() < 1) throw std::invalid_argument("design matrix needs d >= 1");
  if (!x.allFinite()) throw std::invalid_argument("non-finite design matrix");
  GramFactorization gf;
  gf.q = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gf.q);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  // Eigen returns ascending order; store descending, clamped at 0.
  const auto d = gf.q.cols();
  gf.gamma.resize(d);
  gf.v.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    gf.gamma(i) = std::max(0.0, es.eigenvalues()(d - 1 - i));
    gf.v.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  gf.lipschitz = 2.0 * gf.gamma(0);
  return gf;
}

LinearCoefficients ridge_solve(const GramFactorization& gf,
                               const Eigen::VectorXd& xtz, double alpha) {
  if (alpha <= 0) throw std::invalid_argument("ridge alpha must be positive");
  LinearCoefficients out;
  out.penalty = PenaltyKind::L2Squared;
  out.alpha = alpha;
  out.beta = gf.v * ((gf.gamma.array() + alpha).inverse() *
                     (gf.v.transpose() * xtz).array()).matrix();
  out.iterations = 1;
  return out;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& a, double tau) {
  return a.unaryExpr([tau](double v) { return soft_threshold(v, tau); });
}

double lasso_objective(const GramFactorization& gf, const Eigen::VectorXd& xtz,
                       double alpha, const Eigen::VectorXd& beta) {
  return beta.dot(gf.q * beta) - 2.0 * xtz.dot(beta) + alpha * beta.lpNorm<1>();
}

double lasso_kkt_residual(const GramFactorization& gf, const Eigen::VectorXd& xtz,
                          double alpha, const Eigen::VectorXd& beta) {
  Eigen::VectorXd grad = 2.0 * (gf.q * beta) - 2.0 * xtz;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    double r;
    if (beta(i) != 0.0)
      r = std::abs(grad(i) + alpha * (beta(i) > 0 ? 1.0 : -1.0));
    else
      r = std::max(0.0, std::abs(grad(i)) - alpha);
    worst = std::max(worst, r);
  }
  return worst;
}

LinearCoefficients lasso_solve(const GramFactorization& gf,
                               const Eigen::VectorXd& xtz, double alpha,
                               std::optional<Eigen::VectorXd> warm_start,
                               double tol, int max_iters) {
  if (alpha <= 0) throw std::invalid_argument("lasso alpha must be positive");
  if (tol <= 0) throw std::invalid_argument("tol must be positive");
  const double step_l = std::max(gf.lipschitz, 1e-12);

  LinearCoefficients out;
  out.penalty = PenaltyKind::L1;
  out.alpha = alpha;
  Eigen::VectorXd beta =
      warm_start ? *warm_start : Eigen::VectorXd::Zero(xtz.size()).eval();
  double obj = lasso_objective(gf, xtz, alpha, beta);

  out.converged = false;
  for (int it = 1; it <= max_iters; ++it) {
    Eigen::VectorXd grad = 2.0 * (gf.q * beta) - 2.0 * xtz;
    beta = soft_threshold((beta - grad / step_l).eval(), alpha / step_l);
    double next = lasso_objective(gf, xtz, alpha, beta);
    out.final_change = std::abs(next - obj) / std::max(1.0, std::abs(obj));
    obj = next;
    out.iterations = it;
    // Require both signals: the objective can plateau several iterations
    // before the iterate is actually stationary.
    if (std::max(out.final_change, lasso_kkt_residual(gf, xtz, alpha, beta)) < tol) {
      out.converged = true;
      break;
    }
  }
  out.beta = std::move(beta);
  return out;
}

}  // namespace slp
