#include "dqrise/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace dqrise {

Mlp::Mlp(std::vector<int> sizes, Rng& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp: need at least input and output layer");
  for (int s : sizes_)
    if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    int in = sizes_[l], out = sizes_[l + 1];
    double bound = std::sqrt(6.0 / (in + out));
    Mat w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = rng.uniform(-bound, bound);
    weights_.push_back(std::move(w));
    biases_.push_back(Vec::Zero(out));
  }
}

Eigen::Index Mlp::n_params() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

Vec Mlp::params() const {
  Vec p(n_params());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Mat& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) p[k++] = w(r, c);
    p.segment(k, biases_[l].size()) = biases_[l];
    k += biases_[l].size();
  }
  return p;
}

void Mlp::set_params(const Vec& p) {
  if (p.size() != n_params()) throw std::invalid_argument("mlp: parameter size mismatch");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Mat& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = p[k++];
    biases_[l] = p.segment(k, biases_[l].size());
    k += biases_[l].size();
  }
}

Mat Mlp::forward(const Mat& input, MlpCache* cache) const {
  if (input.rows() != in_dim()) throw std::invalid_argument("mlp: input dimension mismatch");
  if (cache) {
    cache->input = input;
    cache->post.clear();
    cache->post.reserve(weights_.size());
  }
  Mat a = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Mat z = (weights_[l] * a).colwise() + biases_[l];
    a = (l + 1 < weights_.size()) ? Mat(z.array().tanh().matrix()) : std::move(z);
    if (cache) cache->post.push_back(a);
  }
  return a;
}

Vec Mlp::forward(const Vec& input) const { return forward(Mat(input), nullptr).col(0); }

Mat Mlp::backward(const MlpCache& cache, const Mat& out_grad, Eigen::Ref<Vec> grad) const {
  if (grad.size() != n_params()) throw std::invalid_argument("mlp: gradient size mismatch");
  // segment offsets, front to back
  std::vector<Eigen::Index> off(weights_.size());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    off[l] = k;
    k += weights_[l].size() + biases_[l].size();
  }
  Mat delta = out_grad;  // output layer is linear
  for (int l = n_layers() - 1; l >= 0; --l) {
    const Mat& prev = (l == 0) ? cache.input : cache.post[l - 1];
    Mat gw = delta * prev.transpose();
    Vec gb = delta.rowwise().sum();
    Eigen::Index p = off[l];
    const Mat& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) grad[p++] += gw(r, c);
    grad.segment(p, gb.size()) += gb;
    delta = w.transpose() * delta;
    if (l > 0) delta.array() *= (1.0 - cache.post[l - 1].array().square());  // tanh'
  }
  return delta;
}

}  // namespace dqrise
