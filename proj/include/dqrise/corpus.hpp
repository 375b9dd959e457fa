#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqrise/env.hpp"
#include "dqrise/expert.hpp"
#include "dqrise/types.hpp"

namespace dqrise {

struct DemoRecord {
  int t = 0;
  Obs obs;
  Eigen::Vector4d arm;  // commanded arm action
  Hand hand;            // commanded hand action
};

struct Demonstration {
  int id = 0;
  std::vector<DemoRecord> records;
};

struct Corpus {
  Task task = Task::Hooklid;
  int n_demos = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> replaced_seeds;  // expert failures that were skipped
  std::vector<Demonstration> demos;
};

// Relabeled variants: the hand action is collapsed to the scalar encoding of
// its nearest codebook state; the original commanded hand is kept alongside.
struct RelabeledRecord {
  int t = 0;
  Obs obs;
  Eigen::Vector4d arm;
  double z = 0.0;
  int rank = 0;
  Hand original_hand;
};

struct RelabeledDemo {
  int id = 0;
  std::vector<RelabeledRecord> records;
};

struct RelabeledCorpus {
  Task task = Task::Hooklid;
  int n_demos = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> replaced_seeds;
  std::vector<RelabeledDemo> demos;
};

// One scripted episode; records hold the commanded actions. Episodes stop
// three steps after success or at max_steps.
Demonstration run_expert_demo(const TaskSpec& spec, std::uint64_t ep_seed,
                              const ExpertConfig& cfg, int max_steps, bool* success = nullptr);

// Episode seeds run seed..seed+n-1; a failed episode is skipped and a fresh
// seed from beyond the block is drawn in its place (recorded in the corpus).
Corpus generate_corpus(Task task, int n, std::uint64_t seed, int jobs = 1, int max_steps = 200);

void save_corpus(const Corpus& c, const std::string& path);
Corpus load_corpus(const std::string& path);

void save_relabeled(const RelabeledCorpus& c, const std::string& path);
RelabeledCorpus load_relabeled(const std::string& path);

std::vector<Hand> corpus_hands(const Corpus& c);

}  // namespace dqrise
