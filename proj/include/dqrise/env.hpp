#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqrise/types.hpp"

namespace dqrise {

enum class Task { Hooklid, PickPlace };

std::string task_name(Task t);
Task task_from_name(const std::string& name);

// Canonical hand poses in normalized joint units.
Hand hand_open();
Hand hand_hook();
Hand hand_pinch();

struct TaskSpec {
  Task task = Task::Hooklid;

  // actuation caps per step
  double arm_step = 0.08;   // per translation coordinate
  double yaw_step = 0.2;    // radians
  double hand_step = 0.15;  // per joint

  // phase gates
  double planar_tol = 0.08;  // arm-to-target planar distance
  double hand_tol = 0.12;    // hand-to-canonical-pose distance
  double hold_tol = 0.15;    // hand distance allowed while a grip is held
  double hook_z = 0.35;      // arm must press below this to hook
  double open_yaw = 1.2;     // cumulative lid rotation for OPEN

  // hooklid collision: a hand closed to HOOK inside this descent band
  // knocks the lid over before the hook can seat (latched, unrecoverable)
  double knock_z_lo = 0.40;
  double knock_z_hi = 0.60;
  double knock_planar = 0.20;

  Eigen::Vector2d place_zone{-0.5, -0.5};

  static TaskSpec make(Task t);
  std::vector<std::string> phase_names() const;  // achievement order
};

struct EnvState {
  Task task = Task::Hooklid;
  ArmState arm;                     // starts at home (0,0,1,0)
  Hand hand;                        // starts at OPEN
  Eigen::Vector2d object{0.0, 0.0}; // lid / block position
  double object_yaw = 0.0;

  bool hook = false;
  bool open = false;
  bool grasp = false;
  bool place = false;
  bool knocked = false;   // hooklid: lid knocked over by a premature grip
  bool attached = false;  // pickplace: block follows the arm
  double yaw_since_hook = 0.0;
  int step = 0;
};

Obs observe(const EnvState& s);
EnvState env_reset(const TaskSpec& spec, std::uint64_t seed);
EnvState env_step(const TaskSpec& spec, const EnvState& s, const ArmState& arm_cmd,
                  const Hand& hand_cmd);

bool phase_done(const EnvState& s, const std::string& phase);
bool task_success(const TaskSpec& spec, const EnvState& s);

}  // namespace dqrise
