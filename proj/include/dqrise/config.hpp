#pragma once

#include <cstdint>
#include <string>

#include "dqrise/policy.hpp"
#include "dqrise/vqvae.hpp"

namespace dqrise {

// Tool-level settings. Precedence: built-in defaults, then a JSON config
// file, then command-line flags. Unknown keys anywhere in the file are
// rejected rather than ignored.
struct RunConfig {
  std::string task = "hooklid";
  std::string variant = "dq-rise";
  std::uint64_t seed = 0;
  int n = 50;        // demos to generate
  int trials = 20;   // evaluation episodes
  int jobs = 1;      // worker threads for demo generation / evaluation
  int max_steps = 120;
  bool timing = false;  // record wall_ms in metrics (breaks byte-reproducibility)
  VqVaeConfig vqvae;
  PolicyConfig policy;
};

RunConfig default_config();
void apply_config_text(RunConfig& rc, const std::string& json_text);
RunConfig load_config_file(const std::string& path);
std::string config_to_json_string(const RunConfig& rc);

}  // namespace dqrise
