#include "slp/simulate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace slp {

SimulatedData simulate(const SimConfig& cfg) {
  if (cfg.n_users < 1 || cfg.min_sessions < 1 || cfg.max_sessions < cfg.min_sessions)
    throw std::invalid_argument("invalid SimConfig");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> count_dist(cfg.min_sessions, cfg.max_sessions);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SimulatedData out;
  out.user_effects.resize(cfg.n_users);
  out.beta.resize(cfg.n_covariates);
  for (int j = 0; j < cfg.n_covariates; ++j) out.beta(j) = cfg.beta_scale * gauss(rng);

  std::vector<int> counts(static_cast<std::size_t>(cfg.n_users));
  int total = 0;
  for (int i = 0; i < cfg.n_users; ++i) {
    counts[static_cast<std::size_t>(i)] = count_dist(rng);
    total += counts[static_cast<std::size_t>(i)];
    out.user_effects(i) = cfg.sigma0 * gauss(rng);
  }

  out.x.resize(total, cfg.n_covariates);
  out.y.resize(total);
  int row = 0;
  for (int i = 0; i < cfg.n_users; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "u%05d", i);
    out.user_ids.emplace_back(buf);
    for (int j = 0; j < counts[static_cast<std::size_t>(i)]; ++j) {
      double link = out.user_effects(i);
      for (int c = 0; c < cfg.n_covariates; ++c) {
        out.x(row, c) = gauss(rng);
        link += out.x(row, c) * out.beta(c);
      }
      double y = cfg.global_mean + link + cfg.sigma1 * gauss(rng);
      if (cfg.corrupt_fraction > 0 && unif(rng) < cfg.corrupt_fraction) {
        double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
        y += sign * cfg.corrupt_magnitude * cfg.sigma1;
        out.corrupted.push_back(row);
      }
      out.y(row) = y;
      out.row_user.push_back(i);

      Session s;
      s.user_id = out.user_ids.back();
      s.start_time = 86400.0 * i + 3600.0 * j;  // synthetic, ordered per user
      s.log_length = y;
      s.raw_length = std::exp(y);
      s.session_index = j + 1;
      out.sessions.add(std::move(s));
      ++row;
    }
  }
  return out;
}

}  // namespace slp
