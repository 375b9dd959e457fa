#pragma once

#include <vector>

#include "dqrise/rng.hpp"
#include "dqrise/types.hpp"

namespace dqrise {

// Activations of one forward pass, kept for the backward pass.
// Batches are columns throughout.
struct MlpCache {
  Mat input;              // in_dim x batch
  std::vector<Mat> post;  // per layer, post-activation, size_l x batch
};

// Fully connected net, tanh hidden layers, linear output.
// Parameters flatten per layer as [W row-major, b], layers in order; the
// same layout is used for optimizer state, gradients and serialization.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, Rng& rng);  // Glorot-uniform weights, zero biases

  const std::vector<int>& sizes() const { return sizes_; }
  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  int n_layers() const { return static_cast<int>(weights_.size()); }
  Eigen::Index n_params() const;

  Vec params() const;
  void set_params(const Vec& p);

  Mat forward(const Mat& input, MlpCache* cache = nullptr) const;
  Vec forward(const Vec& input) const;

  // Accumulates parameter gradients into grad (must be n_params() long,
  // caller zeroes) and returns the gradient w.r.t. the input.
  Mat backward(const MlpCache& cache, const Mat& out_grad, Eigen::Ref<Vec> grad) const;

 private:
  std::vector<int> sizes_;
  std::vector<Mat> weights_;  // out x in
  std::vector<Vec> biases_;
};

}  // namespace dqrise
