#pragma once

#include <cmath>
#include <stdexcept>

#include "dqrise/types.hpp"

namespace dqrise {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  long long step = 0;
  AdamConfig cfg;

  AdamState(Eigen::Index n, AdamConfig c = {}) : m(Vec::Zero(n)), v(Vec::Zero(n)), cfg(c) {}
};

// One bias-corrected update in place. Rejects non-finite gradients so a
// diverging training loop stops at the step that produced the bad value.
inline void adam_step(Vec& params, const Vec& grad, AdamState& st) {
  if (params.size() != st.m.size() || grad.size() != st.m.size())
    throw std::invalid_argument("adam: size mismatch");
  if (!grad.allFinite()) throw std::runtime_error("adam: non-finite gradient");
  st.step += 1;
  st.m = st.cfg.beta1 * st.m + (1.0 - st.cfg.beta1) * grad;
  st.v = st.cfg.beta2 * st.v + (1.0 - st.cfg.beta2) * grad.cwiseProduct(grad);
  double c1 = 1.0 - std::pow(st.cfg.beta1, static_cast<double>(st.step));
  double c2 = 1.0 - std::pow(st.cfg.beta2, static_cast<double>(st.step));
  params.array() -=
      st.cfg.lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.cfg.eps);
}

}  // namespace dqrise
