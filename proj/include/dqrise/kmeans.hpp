#pragma once

#include "dqrise/rng.hpp"
#include "dqrise/types.hpp"

#include <vector>

namespace dqrise {

struct KMeansResult {
  Mat centers;                  // d x k
  std::vector<int> assignment;  // per point, nearest center (lowest index on ties)
};

// Lloyd's algorithm. Centers start from k distinct sample columns chosen by
// seeded permutation; throws if the data holds fewer than k distinct points.
// An emptied cluster is recentered on the point farthest from its own center.
KMeansResult kmeans(const Mat& points, int k, int iters, Rng& rng);

int nearest_center(const Mat& centers, const Vec& p);

}  // namespace dqrise
