#include "dqrise/pca.hpp"

#include <stdexcept>

namespace dqrise {
namespace {

Mat covariance(const std::vector<Vec>& points, Vec& mean) {
  if (points.size() < 2) throw std::invalid_argument("pca: need at least two points");
  const Eigen::Index d = points.front().size();
  for (const Vec& p : points)
    if (p.size() != d) throw std::invalid_argument("pca: inconsistent dimensions");
  mean = Vec::Zero(d);
  for (const Vec& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat cov = Mat::Zero(d, d);
  for (const Vec& p : points) {
    Vec c = p - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(points.size() - 1);
  return cov;
}

// orient so the largest-magnitude entry is positive; first index wins ties
void fix_sign(Vec& axis) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i]) > std::abs(axis[best])) best = i;
  if (axis[best] < 0.0) axis = -axis;
}

// leading eigenpair of a PSD matrix; throws on zero matrix / no convergence
std::pair<Vec, double> power_iterate(const Mat& cov, int max_iters, double tol) {
  Eigen::Index start = 0;
  double best_norm = 0.0;
  for (Eigen::Index j = 0; j < cov.cols(); ++j) {
    double n = cov.col(j).norm();
    if (n > best_norm) {
      best_norm = n;
      start = j;
    }
  }
  if (best_norm < 1e-14) throw std::runtime_error("pca: covariance is zero (identical points)");
  Vec v = cov.col(start) / best_norm;
  for (int it = 0; it < max_iters; ++it) {
    Vec w = cov * v;
    double n = w.norm();
    if (n < 1e-300) throw std::runtime_error("pca: iteration collapsed");
    w /= n;
    if ((w - v).norm() < tol) {
      double lambda = w.dot(cov * w);
      return {w, lambda};
    }
    v = std::move(w);
  }
  throw std::runtime_error("pca: power iteration did not converge (axis ill-defined)");
}

}  // namespace

PcaResult pca_first_component(const std::vector<Vec>& points, int max_iters, double tol) {
  Vec mean;
  Mat cov = covariance(points, mean);
  auto [axis, lambda] = power_iterate(cov, max_iters, tol);
  fix_sign(axis);
  return {mean, axis, lambda};
}

Pca2Result pca_top2(const std::vector<Vec>& points) {
  Vec mean;
  Mat cov = covariance(points, mean);
  auto [a1, l1] = power_iterate(cov, 500, 1e-10);
  fix_sign(a1);
  Pca2Result r{mean, a1, Vec::Zero(mean.size())};
  Mat deflated = cov - l1 * a1 * a1.transpose();
  try {
    auto [a2, l2] = power_iterate(deflated, 500, 1e-10);
    if (l2 > 1e-12) {
      a2 -= a1 * a1.dot(a2);  // numerical cleanup
      double n = a2.norm();
      if (n > 1e-12) {
        a2 /= n;
        fix_sign(a2);
        r.axis2 = a2;
      }
    }
  } catch (const std::runtime_error&) {
    // degenerate residual variance: second axis stays zero
  }
  return r;
}

}  // namespace dqrise
