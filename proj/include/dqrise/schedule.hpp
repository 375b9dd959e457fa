#pragma once

#include "dqrise/types.hpp"

namespace dqrise {

// Linear-beta DDPM schedule, 1-based timesteps. Construction validates that
// betas lie strictly inside (0,1) and increase, and that the noise level
// alpha_bar decreases strictly from inside (0,1].
struct DiffusionSchedule {
  int T = 0;
  Vec beta;       // beta[t-1]
  Vec alpha;      // 1 - beta
  Vec alpha_bar;  // running product of alpha

  static DiffusionSchedule linear(int T = 100, double beta_start = 1e-4, double beta_end = 0.08);

  double beta_t(int t) const { return beta[t - 1]; }
  double alpha_t(int t) const { return alpha[t - 1]; }
  double alpha_bar_t(int t) const { return alpha_bar[t - 1]; }
};

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps
Vec ddpm_add_noise(const Vec& x0, int t, const Vec& eps, const DiffusionSchedule& sched);

}  // namespace dqrise
