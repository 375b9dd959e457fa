#pragma once

#include <cmath>
#include <functional>

#include "dqrise/types.hpp"

namespace dqrise {

// Central-difference comparison against an analytic gradient. Returns the
// worst relative error max_i |a_i - n_i| / max(1e-8, |n_i|); callers pin
// their own acceptance threshold.
inline double finite_diff_max_rel_error(const Vec& params,
                                        const std::function<double(const Vec&)>& loss,
                                        const Vec& analytic, double h = 1e-5) {
  Vec p = params;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double keep = p[i];
    p[i] = keep + h;
    double up = loss(p);
    p[i] = keep - h;
    double down = loss(p);
    p[i] = keep;
    double numeric = (up - down) / (2.0 * h);
    double rel = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(numeric));
    if (rel > worst) worst = rel;
  }
  return worst;
}

}  // namespace dqrise
