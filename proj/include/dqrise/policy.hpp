#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dqrise/codebook.hpp"
#include "dqrise/corpus.hpp"
#include "dqrise/mlp.hpp"
#include "dqrise/schedule.hpp"
#include "dqrise/types.hpp"

namespace dqrise {

enum class Variant { DqRise, Rise, RiseS, DqRiseC, NoReindex };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);
bool variant_uses_codebook(Variant v);   // executes hand poses from a codebook
bool variant_uses_relabeled(Variant v);  // trains from relabeled demos

struct PolicyConfig {
  Variant variant = Variant::DqRise;
  int chunk_len = 8;
  int exec_steps = 4;
  int obs_feat = 64;
  std::vector<int> obs_hidden = {64};
  std::vector<int> denoiser_hidden = {128, 128};
  std::vector<int> classifier_hidden = {128};
  int T = 100;
  double beta_start = 1e-4;
  double beta_end = 0.08;
  double lr = 3e-4;
  int batch_size = 256;
  int epochs = 300;
  double grad_clip = 1.0;
  double class_weight = 1.0;
  bool arm_conditioning = true;  // classifier sees the sampled arm chunk
  int num_codes = 16;
  std::string codebook_path;  // recorded in checkpoints for eval convenience

  DiffusionSchedule schedule() const;
};

// Per-step action widths. Diffused: what the (first) denoiser models.
// Total: full action layout captured in training targets and normalization.
int diffused_step_dim(const PolicyConfig& cfg);  // 5 / 10 / 4 / 4
int total_step_dim(const PolicyConfig& cfg);     // 5 / 10 / 10 / 4

struct TrainingPair {
  Obs obs;
  Vec target;               // raw action chunk, step-major, total_step_dim * chunk_len
  std::vector<int> labels;  // per-step code ranks (classification variant only)
};

// Chunks hold the actions at t+1..t+C, repeating the final action past the
// end of the demo; every timestep of every demo yields one pair.
std::vector<TrainingPair> build_training_pairs(const Corpus& c, const PolicyConfig& cfg);
std::vector<TrainingPair> build_training_pairs(const RelabeledCorpus& c, const PolicyConfig& cfg);

struct PolicyModel {
  PolicyConfig cfg;
  Mlp obs_encoder;  // 13 -> obs_feat
  Mlp denoiser;     // obs_feat + diffused_dim*C + 1 (t/T) -> same chunk width
  Mlp denoiser2;    // second head (hand chunk), shared-encoder variant only
  Mlp classifier;   // obs_feat [+ arm chunk] -> num_codes per step
  Vec norm_min;     // per total step dim, tiled across the chunk
  Vec norm_max;
  std::uint64_t seed = 0;

  Eigen::Index n_params() const;
  Vec params() const;
  void set_params(const Vec& p);

  Vec normalize_chunk(const Vec& raw) const;    // affine to [-1,1] per dim
  Vec denormalize_chunk(const Vec& norm) const;
};

PolicyModel make_policy(const PolicyConfig& cfg, std::uint64_t seed);

// Explicit per-sample noising for one batch: timestep and noise per diffusion
// head. The trainer draws these; taking them as inputs makes the batch loss a
// deterministic function of the parameters, so its gradient can be compared
// against finite differences.
struct PolicyNoiseDraw {
  std::vector<int> t1;  // one timestep in [1, T] per column
  Mat eps1;             // first head, diffused_dim*C x batch
  std::vector<int> t2;  // second head, two-head variant only
  Mat eps2;
};

// Mean batch loss (diffusion heads plus the weighted classification term) and
// its gradient in the model's parameter packing. x1/x2 hold the normalized
// per-head target chunks as columns; labels are flattened sample-major
// (classification variant only).
double policy_loss_grad(const PolicyModel& m, const Mat& obs, const Mat& x1, const Mat& x2,
                        const std::vector<int>& labels, const PolicyNoiseDraw& draw, Vec& grad);

struct PolicyTrainResult {
  PolicyModel model;
  std::vector<double> loss_history;  // per-epoch mean training loss
};

PolicyTrainResult train_policy(const std::vector<TrainingPair>& pairs, const PolicyConfig& cfg,
                               std::uint64_t seed);

struct ChunkStep {
  Eigen::Vector4d arm;
  Hand hand = Hand::Zero();  // raw hand command (non-quantized variants)
  double z = 0.0;            // scalar code coordinate (quantized diffusion variants)
  int rank = -1;             // classified code (classification variant)
};

struct ActionChunk {
  Variant variant = Variant::DqRise;
  std::vector<ChunkStep> steps;
};

ActionChunk sample_chunk(const PolicyModel& m, const Obs& obs, const DiffusionSchedule& sched,
                         Rng& rng);

struct EpisodeResult {
  std::vector<std::pair<std::string, bool>> phases;  // in achievement order
  bool success = false;
  int length = 0;
  std::vector<Hand> executed_hands;  // hand commands actually sent to the env
};

// Receding horizon: sample a chunk, execute its first exec_steps actions,
// replan. Quantized variants route the scalar/rank through the codebook, so
// cb is required for them.
using ChunkPolicy = std::function<ActionChunk(const EnvState&, Rng&)>;

EpisodeResult rollout_policy(const TaskSpec& spec, const ChunkPolicy& policy, Variant variant,
                             const ReindexedCodebook* cb, int max_steps, int exec_steps,
                             std::uint64_t seed);

EpisodeResult rollout(const PolicyModel& m, const TaskSpec& spec, const ReindexedCodebook* cb,
                      int max_steps, std::uint64_t seed);

void save_policy(const PolicyModel& m, const std::string& path);
PolicyModel load_policy(const std::string& path);

}  // namespace dqrise
