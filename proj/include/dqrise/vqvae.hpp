#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dqrise/mlp.hpp"
#include "dqrise/rng.hpp"
#include "dqrise/types.hpp"

namespace dqrise {

struct VqVaeConfig {
  int latent_dim = 8;
  std::vector<int> encoder_hidden = {64, 64};
  std::vector<int> decoder_hidden = {64, 64};
  int codebook_size = 4;  // codes per layer; two residual layers
  double beta = 1.67;     // weight on ||sg[z_e] - z_q||^2
  double gamma = 1.67;    // weight on ||z_e - sg[z_q]||^2
  double lr = 3e-4;
  int batch_size = 256;
  int epochs = 1500;
  int warmup_epochs = 10;  // reconstruction-only epochs before codebook init
  int kmeans_iters = 50;
};

// Two-layer residual vector quantizer around an MLP autoencoder. States live
// in [0,1]^6 and are mapped to [-1,1] before encoding; decoder outputs are
// clamped to [-1,1] and mapped back. Code 0 of layer 2 is pinned to the zero
// vector and excluded from the trainable parameters, so composing both layers
// can never quantize worse than layer 1 alone.
struct VqVaeModel {
  VqVaeConfig cfg;
  Mlp encoder;
  Mlp decoder;
  std::array<Mat, 2> codebooks;  // latent_dim x codebook_size, codes as columns
  std::uint64_t seed = 0;

  Eigen::Index n_params() const;
  Vec params() const;  // [encoder, decoder, layer-1 codes, layer-2 codes 1..]
  void set_params(const Vec& p);
};

VqVaeModel make_vqvae(const VqVaeConfig& cfg, std::uint64_t seed);

struct QuantizeResult {
  Vec z_e;
  Vec z_q;
  int i1 = 0;
  int i2 = 0;
  int composite(int codebook_size) const { return i1 * codebook_size + i2; }
};

// Greedy per-layer nearest neighbor; ties resolve to the lowest code index.
QuantizeResult quantize_residual(const VqVaeModel& m, const Vec& z_e);

struct VqVaeLosses {
  double recon = 0.0;   // ||s - s_hat||^2
  double code = 0.0;    // ||sg[z_e] - z_q||^2, unweighted
  double commit = 0.0;  // ||z_e - sg[z_q]||^2, unweighted
  double total = 0.0;   // recon + beta*code + gamma*commit
};

struct VqVaeForward {
  QuantizeResult q;
  Hand recon;
  VqVaeLosses loss;
};

Vec encode_state(const VqVaeModel& m, const Hand& s);
Hand decode_latent(const VqVaeModel& m, const Vec& z);
VqVaeForward vqvae_forward(const VqVaeModel& m, const Hand& s);

// Mean loss over a batch of states (columns) plus the straight-through
// gradient in the model's parameter packing. The reconstruction path treats
// the quantizer as identity for the encoder, selected codes receive only the
// beta term, and the encoder additionally receives the gamma term.
double vqvae_loss_grad(const VqVaeModel& m, const Mat& states, Vec& grad,
                       VqVaeLosses* terms = nullptr);

struct VqVaeTrainResult {
  VqVaeModel model;
  std::vector<double> loss_history;   // per-epoch mean total loss
  std::vector<double> recon_history;  // per-epoch mean per-dimension recon MSE
};

VqVaeTrainResult train_vqvae(const std::vector<Hand>& states, const VqVaeConfig& cfg,
                             std::uint64_t seed);

// All composite reconstructions decode(c1_i + c2_j), ordered by i*K2+j.
std::vector<Hand> merge_codebooks(const VqVaeModel& m);

double recon_mse(const VqVaeModel& m, const std::vector<Hand>& states);

std::string vqvae_to_json_string(const VqVaeModel& m, const std::vector<double>& loss_history);
void save_vqvae(const VqVaeModel& m, const std::vector<double>& loss_history,
                const std::string& path);
VqVaeModel load_vqvae(const std::string& path, std::vector<double>* loss_history = nullptr);

}  // namespace dqrise
