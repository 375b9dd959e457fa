#pragma once

#include <utility>

#include "dqrise/env.hpp"
#include "dqrise/rng.hpp"
#include "dqrise/types.hpp"

namespace dqrise {

struct ExpertConfig {
  double pos_jitter = 0.01;   // sigma on arm command coordinates
  double hand_jitter = 0.02;  // sigma on hand joint commands
  // Fault injection: command the grip pose from the start of the episode,
  // several steps before the arm reaches hooking depth.
  bool premature_hand = false;
};

// Scripted closed-loop controller; all episode progress is read back from
// the environment flags, so the policy itself is stateless.
std::pair<ArmState, Hand> expert_policy(const TaskSpec& spec, const EnvState& s, Rng& rng,
                                        const ExpertConfig& cfg = {});

}  // namespace dqrise
