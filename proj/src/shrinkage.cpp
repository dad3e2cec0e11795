#include "slp/shrinkage.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace slp {

Eigen::VectorXd bayes_sequence(const Eigen::VectorXd& z, double a_squared) {
  if (a_squared <= 0) throw std::invalid_argument("a_squared must be positive");
  if (!z.allFinite()) throw std::invalid_argument("non-finite input");
  return (1.0 - 1.0 / (1.0 + a_squared)) * z;
}

Eigen::VectorXd james_stein(const Eigen::VectorXd& z) {
  const auto n = z.size();
  if (n < 3) throw std::invalid_argument("james_stein requires n >= 3");
  double s = z.squaredNorm();
  if (s <= 0) throw std::invalid_argument("james_stein requires |z|^2 > 0");
  return (1.0 - static_cast<double>(n - 2) / s) * z;
}

Eigen::VectorXd james_stein_positive(const Eigen::VectorXd& z) {
  const auto n = z.size();
  if (n < 3) throw std::invalid_argument("james_stein requires n >= 3");
  double s = z.squaredNorm();
  if (s <= 0) throw std::invalid_argument("james_stein requires |z|^2 > 0");
  double factor = std::max(0.0, 1.0 - static_cast<double>(n - 2) / s);
  return factor * z;
}

SequenceRisks simulate_sequence_risk(int n, double a_squared, int trials,
                                     std::uint64_t seed) {
  if (n < 3 || trials < 1) throw std::invalid_argument("need n >= 3 and trials >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double a = std::sqrt(a_squared);

  double se_ml = 0.0, se_eb = 0.0, se_bayes = 0.0;
  Eigen::VectorXd mu(n), z(n);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) {
      mu(i) = a * gauss(rng);
      z(i) = mu(i) + gauss(rng);
    }
    se_ml += (z - mu).squaredNorm();
    se_eb += (james_stein(z) - mu).squaredNorm();
    se_bayes += (bayes_sequence(z, a_squared) - mu).squaredNorm();
  }
  const double inv = 1.0 / static_cast<double>(trials);
  return {se_ml * inv, se_eb * inv, se_bayes * inv};
}

VarianceComponents estimate_variance_components(const SessionDataset& train,
                                                double eps_var) {
  double y_sum = 0.0;
  std::size_t y_n = 0;
  for (const auto& [uid, sessions] : train.by_user())
    for (const auto& s : sessions) {
      y_sum += s.log_length;
      ++y_n;
    }
  if (y_n == 0) throw std::invalid_argument("empty training set");
  const double global_mean = y_sum / static_cast<double>(y_n);

  // Per-user moment estimators aggregated over users with n_i >= 2.
  double sum_s0 = 0.0, sum_total = 0.0;
  std::size_t eligible = 0;
  for (const auto& [uid, sessions] : train.by_user()) {
    const auto ni = static_cast<double>(sessions.size());
    if (sessions.size() < 2) continue;
    double row_sum = 0.0, t_i = 0.0;
    for (const auto& s : sessions) {
      double y = s.log_length - global_mean;
      row_sum += y;
      t_i += y * y;
    }
    sum_s0 += (row_sum * row_sum - t_i) / (ni * (ni - 1.0));
    sum_total += t_i / ni;
    ++eligible;
  }
  if (eligible == 0)
    throw std::runtime_error("variance estimation needs a user with >= 2 sessions");

  const double inv = 1.0 / static_cast<double>(eligible);
  double sigma0_sq = sum_s0 * inv;
  double sigma1_sq = sum_total * inv - sigma0_sq;
  VarianceComponents vc;
  vc.sigma0_sq = std::max(sigma0_sq, eps_var);
  vc.sigma1_sq = std::max(sigma1_sq, eps_var);
  vc.global_mean = global_mean;
  return vc;
}

Model1Fit model1_fit(const SessionDataset& train, const VarianceComponents& vc) {
  Model1Fit fit;
  fit.vc = vc;
  const double lambda = vc.lambda();
  for (const auto& [uid, sessions] : train.by_user()) {
    const auto ni = static_cast<double>(sessions.size());
    double mean = 0.0;
    for (const auto& s : sessions) mean += s.log_length - vc.global_mean;
    mean /= ni;
    fit.mu[uid] = mean / (1.0 + lambda / ni);
    fit.session_count[uid] = static_cast<int>(sessions.size());
  }
  return fit;
}

double model1_predict(const Model1Fit& fit, const std::string& user_id) {
  auto it = fit.mu.find(user_id);
  if (it == fit.mu.end()) throw std::out_of_range("unknown user: " + user_id);
  return fit.vc.global_mean + it->second;
}

}  // namespace slp
