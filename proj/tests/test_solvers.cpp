#include <doctest.h>

#include <cmath>
#include <random>

#include "slp/solvers.hpp"

using namespace slp;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) x(r, c) = gauss(rng);
  return x;
}

// Independent reference solver for min beta^T Q beta - 2 <xtz, beta> +
// alpha |beta|_1: cyclic coordinate descent with exact per-coordinate
// minimization, written without reference to the production code paths.
Eigen::VectorXd coordinate_descent_lasso(const Eigen::MatrixXd& q,
                                         const Eigen::VectorXd& xtz, double alpha,
                                         int sweeps = 20000, double tol = 1e-14) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q.cols());
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double max_move = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      if (q(j, j) <= 0) continue;
      // Partial residual: fix all other coordinates.
      double rho = xtz(j) - q.row(j).dot(beta) + q(j, j) * beta(j);
      double updated = soft_threshold(rho, alpha / 2.0) / q(j, j);
      max_move = std::max(max_move, std::abs(updated - beta(j)));
      beta(j) = updated;
    }
    if (max_move < tol) break;
  }
  return beta;
}

}  // namespace

TEST_CASE("precompute_gram: identity for orthonormal columns") {
  Eigen::MatrixXd x(4, 2);
  x << 0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5;
  x.col(0).normalize();
  x.col(1).normalize();
  auto gf = precompute_gram(x);
  CHECK((gf.q - Eigen::MatrixXd::Identity(2, 2)).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(gf.gamma(0) == doctest::Approx(1.0));
  CHECK(gf.gamma(1) == doctest::Approx(1.0));
  CHECK(gf.lipschitz == doctest::Approx(2.0));
}

TEST_CASE("precompute_gram: eigendecomposition reconstructs Q") {
  std::mt19937_64 rng(11);
  Eigen::MatrixXd x = random_matrix(50, 3, rng);
  auto gf = precompute_gram(x);
  Eigen::MatrixXd rebuilt = gf.v * gf.gamma.asDiagonal() * gf.v.transpose();
  CHECK((rebuilt - gf.q).norm() == doctest::Approx(0.0).epsilon(1e-10));
  // Eigenvalues descending and non-negative.
  for (Eigen::Index i = 1; i < gf.gamma.size(); ++i)
    CHECK(gf.gamma(i) <= gf.gamma(i - 1));
  CHECK(gf.gamma.minCoeff() >= 0.0);
}

TEST_CASE("ridge_solve: identity Gram halves the target at alpha = 1") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(3, 3);
  auto gf = precompute_gram(x);
  Eigen::VectorXd v(3);
  v << 1, -2, 4;
  auto sol = ridge_solve(gf, v, 1.0);
  CHECK((sol.beta - v / 2.0).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ridge_solve matches a direct dense solve") {
  std::mt19937_64 rng(12);
  Eigen::MatrixXd x = random_matrix(20, 3, rng);
  Eigen::VectorXd z = random_matrix(20, 1, rng);
  auto gf = precompute_gram(x);
  Eigen::VectorXd xtz = x.transpose() * z;
  for (double alpha : {0.01, 0.5, 3.0, 100.0}) {
    auto sol = ridge_solve(gf, xtz, alpha);
    Eigen::MatrixXd lhs = gf.q + alpha * Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd direct = lhs.ldlt().solve(xtz);
    CHECK((sol.beta - direct).norm() == doctest::Approx(0.0).epsilon(1e-8));
  }
}

TEST_CASE("ridge_solve: coefficient norm is monotone in alpha") {
  std::mt19937_64 rng(13);
  Eigen::MatrixXd x = random_matrix(30, 4, rng);
  Eigen::VectorXd xtz = x.transpose() * Eigen::VectorXd(random_matrix(30, 1, rng));
  auto gf = precompute_gram(x);
  double prev_norm = 1e18;
  for (double alpha : {0.001, 0.01, 0.1, 1.0, 10.0, 1e6}) {
    double norm = ridge_solve(gf, xtz, alpha).beta.norm();
    CHECK(norm <= prev_norm + 1e-12);
    prev_norm = norm;
  }
  CHECK(prev_norm < 1e-4);  // alpha -> infinity drives beta to 0
}

TEST_CASE("soft_threshold formula") {
  CHECK(soft_threshold(2.5, 1.0) == doctest::Approx(1.5));
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-3.0, 1.0) == doctest::Approx(-2.0));
  CHECK(soft_threshold(7.25, 0.0) == 7.25);
  Eigen::VectorXd a(3);
  a << 2.5, -0.5, -3.0;
  Eigen::VectorXd out = soft_threshold(a, 1.0);
  CHECK(out(0) == doctest::Approx(1.5));
  CHECK(out(1) == 0.0);
  CHECK(out(2) == doctest::Approx(-2.0));
}

TEST_CASE("lasso_solve: scalar hand solution") {
  Eigen::MatrixXd x(1, 1);
  x << 1;  // Q = [1]
  auto gf = precompute_gram(x);
  Eigen::VectorXd xtz(1);
  xtz << 3;
  auto sol = lasso_solve(gf, xtz, 2.0);
  // Stationarity: 2 beta - 6 + 2 sign(beta) = 0 -> beta = 2.
  CHECK(sol.beta(0) == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(sol.converged);
}

TEST_CASE("lasso_solve: alpha beyond 2|xtz|_inf yields zero") {
  std::mt19937_64 rng(14);
  Eigen::MatrixXd x = random_matrix(25, 3, rng);
  Eigen::VectorXd xtz = x.transpose() * Eigen::VectorXd(random_matrix(25, 1, rng));
  auto gf = precompute_gram(x);
  double alpha = 2.0 * xtz.cwiseAbs().maxCoeff() * 1.001;
  auto sol = lasso_solve(gf, xtz, alpha);
  CHECK(sol.beta.norm() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(lasso_kkt_residual(gf, xtz, alpha, sol.beta) <= 1e-10);
}

TEST_CASE("lasso_solve matches the coordinate-descent reference") {
  std::mt19937_64 rng(15);
  Eigen::MatrixXd x = random_matrix(30, 4, rng);
  Eigen::VectorXd xtz = x.transpose() * Eigen::VectorXd(random_matrix(30, 1, rng));
  auto gf = precompute_gram(x);
  for (double alpha : {0.1, 1.0, 5.0, 20.0}) {
    auto sol = lasso_solve(gf, xtz, alpha);
    Eigen::VectorXd ref = coordinate_descent_lasso(gf.q, xtz, alpha);
    double ours = lasso_objective(gf, xtz, alpha, sol.beta);
    double theirs = lasso_objective(gf, xtz, alpha, ref);
    CHECK(std::abs(ours - theirs) <=
          1e-6 * std::max(1.0, std::abs(theirs)));
    CHECK(lasso_kkt_residual(gf, xtz, alpha, sol.beta) <= 1e-6);
  }
}

TEST_CASE("lasso warm starts do not hurt along a descending alpha path") {
  std::mt19937_64 rng(16);
  Eigen::MatrixXd x = random_matrix(40, 5, rng);
  Eigen::VectorXd xtz = x.transpose() * Eigen::VectorXd(random_matrix(40, 1, rng));
  auto gf = precompute_gram(x);
  std::vector<double> alphas;
  double alpha_max = 2.0 * xtz.cwiseAbs().maxCoeff();
  for (int k = 0; k < 10; ++k) alphas.push_back(alpha_max * std::pow(0.5, k));

  int warm_total = 0, cold_total = 0;
  std::optional<Eigen::VectorXd> carry;
  for (double alpha : alphas) {
    auto warm = lasso_solve(gf, xtz, alpha, carry);
    carry = warm.beta;
    warm_total += warm.iterations;
    cold_total += lasso_solve(gf, xtz, alpha).iterations;
    // Warm and cold solves agree on the optimum.
    double gap = std::abs(lasso_objective(gf, xtz, alpha, warm.beta) -
                          lasso_objective(gf, xtz, alpha,
                                          lasso_solve(gf, xtz, alpha).beta));
    CHECK(gap <= 1e-6 * std::max(1.0, std::abs(
                     lasso_objective(gf, xtz, alpha, warm.beta))));
  }
  CHECK(warm_total <= cold_total);
}

TEST_CASE("lasso_kkt_residual flags perturbed solutions") {
  std::mt19937_64 rng(17);
  Eigen::MatrixXd x = random_matrix(30, 3, rng);
  Eigen::VectorXd xtz = x.transpose() * Eigen::VectorXd(random_matrix(30, 1, rng));
  auto gf = precompute_gram(x);
  auto sol = lasso_solve(gf, xtz, 0.5, std::nullopt, 1e-12);
  CHECK(lasso_kkt_residual(gf, xtz, 0.5, sol.beta) <= 1e-6);
  Eigen::VectorXd perturbed = sol.beta;
  Eigen::Index biggest;
  perturbed.cwiseAbs().maxCoeff(&biggest);
  perturbed(biggest) += 0.1;
  CHECK(lasso_kkt_residual(gf, xtz, 0.5, perturbed) > 1e-3);

  // beta = 0 with a huge alpha is exactly stationary.
  CHECK(lasso_kkt_residual(gf, xtz, 1e9, Eigen::VectorXd::Zero(3)) == 0.0);
}

TEST_CASE("lasso iteration count grows slowly with precision") {
  // Linear convergence: tightening tol from 1e-4 to 1e-8 should cost less
  // than 3x the iterations on a well-conditioned instance.
  std::mt19937_64 rng(18);
  Eigen::MatrixXd x = random_matrix(60, 4, rng);
  Eigen::VectorXd xtz = x.transpose() * Eigen::VectorXd(random_matrix(60, 1, rng));
  auto gf = precompute_gram(x);
  auto coarse = lasso_solve(gf, xtz, 1.0, std::nullopt, 1e-4);
  auto fine = lasso_solve(gf, xtz, 1.0, std::nullopt, 1e-8);
  CHECK(fine.iterations < 3 * std::max(coarse.iterations, 1));
}
