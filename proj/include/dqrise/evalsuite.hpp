#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqrise/codebook.hpp"
#include "dqrise/corpus.hpp"
#include "dqrise/policy.hpp"
#include "dqrise/vqvae.hpp"

namespace dqrise {

struct RunMetrics {
  std::string variant;
  std::string task;
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<std::pair<std::string, double>> phases;  // success rate per phase
  double mean_len = 0.0;
  long long wall_ms = 0;  // stays 0 unless timing was requested
};

struct Metrics {
  std::vector<RunMetrics> runs;
};

// Fixed number of episodes with per-episode seeds derived from eval_seed.
RunMetrics evaluate_policy(const PolicyModel& m, Task task, const ReindexedCodebook* cb,
                           int trials, std::uint64_t eval_seed, int max_steps, int jobs,
                           bool timing);

struct SuiteConfig {
  Task task = Task::Hooklid;
  int n_demos = 50;
  std::uint64_t corpus_seed = 0;
  std::uint64_t vqvae_seed = 1;
  std::uint64_t policy_seed = 2;
  std::vector<std::uint64_t> eval_seeds = {101, 102, 103};
  int trials = 100;  // episodes per eval seed
  int max_steps = 120;
  int jobs = 1;
  bool timing = false;
  VqVaeConfig vqvae;
  PolicyConfig policy;  // base settings, shared by every variant
  std::vector<Variant> variants = {Variant::DqRise, Variant::Rise, Variant::RiseS,
                                   Variant::DqRiseC, Variant::NoReindex};

  SuiteConfig() {
    // Comparative-experiment regime: short horizon, per-step replanning, long
    // training. Long open-loop chunks cap every variant well below its
    // closed-loop ceiling in this environment, which would mask the ordering
    // the suite exists to measure.
    policy.chunk_len = 4;
    policy.exec_steps = 1;
    policy.epochs = 3000;
  }
};

struct SuiteResult {
  Metrics metrics;
  Corpus corpus;
  VqVaeModel vqvae;
  ReindexedCodebook codebook;           // principal-axis ordering
  ReindexedCodebook codebook_identity;  // composite-order ablation
};

// Shared pipeline: one corpus, one quantizer, per-variant policies, identical
// evaluation episodes. Runs are sorted by (variant, task, seed) before use.
SuiteResult evaluate_suite(const SuiteConfig& cfg);

void save_metrics(const Metrics& m, const std::string& path);
std::string metrics_to_json_string(const Metrics& m);

}  // namespace dqrise
