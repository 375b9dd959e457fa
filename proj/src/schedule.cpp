#include "dqrise/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace dqrise {

DiffusionSchedule DiffusionSchedule::linear(int T, double beta_start, double beta_end) {
  if (T < 1) throw std::invalid_argument("schedule: T must be at least 1");
  DiffusionSchedule s;
  s.T = T;
  s.beta.resize(T);
  for (int t = 0; t < T; ++t)
    s.beta[t] = (T == 1) ? beta_start
                         : beta_start + (beta_end - beta_start) * static_cast<double>(t) /
                               static_cast<double>(T - 1);
  s.alpha = (1.0 - s.beta.array()).matrix();
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    prod *= s.alpha[t];
    s.alpha_bar[t] = prod;
  }
  for (int t = 0; t < T; ++t) {
    if (!(s.beta[t] > 0.0 && s.beta[t] < 1.0))
      throw std::invalid_argument("schedule: betas must lie in (0,1)");
    if (t > 0 && !(s.beta[t] > s.beta[t - 1]))
      throw std::invalid_argument("schedule: betas must increase strictly");
    if (!(s.alpha_bar[t] > 0.0 && s.alpha_bar[t] <= 1.0))
      throw std::invalid_argument("schedule: alpha_bar left (0,1]");
    if (t > 0 && !(s.alpha_bar[t] < s.alpha_bar[t - 1]))
      throw std::invalid_argument("schedule: alpha_bar must decrease strictly");
  }
  return s;
}

Vec ddpm_add_noise(const Vec& x0, int t, const Vec& eps, const DiffusionSchedule& sched) {
  if (t < 1 || t > sched.T) throw std::invalid_argument("add_noise: t out of range");
  if (x0.size() != eps.size()) throw std::invalid_argument("add_noise: size mismatch");
  double ab = sched.alpha_bar_t(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

}  // namespace dqrise
