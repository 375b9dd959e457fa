#include "dqrise/kmeans.hpp"

#include <limits>
#include <stdexcept>

namespace dqrise {

int nearest_center(const Mat& centers, const Vec& p) {
  int best = 0;
  double best_d = (centers.col(0) - p).squaredNorm();
  for (int j = 1; j < centers.cols(); ++j) {
    double d = (centers.col(j) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

KMeansResult kmeans(const Mat& points, int k, int iters, Rng& rng) {
  const Eigen::Index n = points.cols();
  if (n == 0) throw std::invalid_argument("kmeans: empty data");
  if (k <= 0) throw std::invalid_argument("kmeans: k must be positive");

  Mat centers(points.rows(), k);
  {
    std::vector<int> order = rng.permutation(static_cast<int>(n));
    int filled = 0;
    for (int idx : order) {
      bool dup = false;
      for (int j = 0; j < filled && !dup; ++j)
        if ((centers.col(j) - points.col(idx)).squaredNorm() == 0.0) dup = true;
      if (!dup) centers.col(filled++) = points.col(idx);
      if (filled == k) break;
    }
    if (filled < k) throw std::runtime_error("kmeans: fewer distinct points than clusters");
  }

  std::vector<int> assign(n, 0);
  for (int it = 0; it < iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) assign[i] = nearest_center(centers, points.col(i));
    Mat sums = Mat::Zero(points.rows(), k);
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.col(assign[i]) += points.col(i);
      ++counts[assign[i]];
    }
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        centers.col(j) = sums.col(j) / counts[j];
      } else {
        // farthest point from its current center; lowest index breaks ties
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double d = (points.col(i) - centers.col(assign[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.col(j) = points.col(far);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) assign[i] = nearest_center(centers, points.col(i));
  return {std::move(centers), std::move(assign)};
}

}  // namespace dqrise
