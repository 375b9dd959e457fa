#pragma once

#include <vector>

#include "dqrise/types.hpp"

namespace dqrise {

struct PcaResult {
  Vec mean;
  Vec axis;           // unit length; largest-magnitude entry is positive
  double variance;    // eigenvalue along axis
};

struct Pca2Result {
  Vec mean;
  Vec axis1;
  Vec axis2;          // zero vector when the deflated covariance is degenerate
};

// Leading eigenvector of the sample covariance (n-1 denominator) by power
// iteration. Throws if the points coincide (zero covariance) or if the
// iteration fails to converge, which happens when the top two eigenvalues
// are too close for the axis to be well defined.
PcaResult pca_first_component(const std::vector<Vec>& points, int max_iters = 500,
                              double tol = 1e-10);

// First two components; the second comes from the deflated covariance.
Pca2Result pca_top2(const std::vector<Vec>& points);

}  // namespace dqrise
