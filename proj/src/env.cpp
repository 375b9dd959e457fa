#include "dqrise/env.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dqrise/rng.hpp"

namespace dqrise {
namespace {

constexpr double kPi = std::numbers::pi;

double clampd(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

// move one coordinate toward a target, capped per step
double approach(double cur, double target, double cap) {
  return cur + clampd(target - cur, -cap, cap);
}

}  // namespace

std::string task_name(Task t) { return t == Task::Hooklid ? "hooklid" : "pickplace"; }

Task task_from_name(const std::string& name) {
  if (name == "hooklid") return Task::Hooklid;
  if (name == "pickplace") return Task::PickPlace;
  throw std::invalid_argument("unknown task: " + name);
}

Hand hand_open() { return (Hand() << 0.1, 0.1, 0.1, 0.1, 0.1, 0.1).finished(); }
Hand hand_hook() { return (Hand() << 0.9, 0.9, 0.2, 0.2, 0.2, 0.8).finished(); }
Hand hand_pinch() { return (Hand() << 0.8, 0.8, 0.1, 0.1, 0.1, 0.9).finished(); }

TaskSpec TaskSpec::make(Task t) {
  TaskSpec s;
  s.task = t;
  return s;
}

std::vector<std::string> TaskSpec::phase_names() const {
  if (task == Task::Hooklid) return {"hook", "open"};
  return {"grasp", "place"};
}

Obs observe(const EnvState& s) {
  Obs o;
  o << s.arm.x, s.arm.y, s.arm.z, s.arm.yaw, s.hand, s.object.x(), s.object.y(), s.object_yaw;
  return o;
}

EnvState env_reset(const TaskSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  EnvState s;
  s.task = spec.task;
  s.arm = ArmState{0.0, 0.0, 1.0, 0.0};
  s.hand = hand_open();
  s.object.x() = rng.uniform(-0.6, 0.6);
  s.object.y() = rng.uniform(-0.6, 0.6);
  s.object_yaw = 0.0;
  return s;
}

EnvState env_step(const TaskSpec& spec, const EnvState& s, const ArmState& arm_cmd,
                  const Hand& hand_cmd) {
  if (!hand_cmd.allFinite() || !std::isfinite(arm_cmd.x) || !std::isfinite(arm_cmd.y) ||
      !std::isfinite(arm_cmd.z) || !std::isfinite(arm_cmd.yaw))
    throw std::invalid_argument("env: non-finite action");

  EnvState n = s;
  const double prev_z = s.arm.z;
  const double prev_yaw = s.arm.yaw;

  n.arm.x = approach(s.arm.x, clampd(arm_cmd.x, -1.0, 1.0), spec.arm_step);
  n.arm.y = approach(s.arm.y, clampd(arm_cmd.y, -1.0, 1.0), spec.arm_step);
  n.arm.z = approach(s.arm.z, clampd(arm_cmd.z, 0.0, 1.0), spec.arm_step);
  n.arm.yaw = approach(s.arm.yaw, clampd(arm_cmd.yaw, -kPi, kPi), spec.yaw_step);
  for (int j = 0; j < 6; ++j)
    n.hand[j] = approach(s.hand[j], clampd(hand_cmd[j], 0.0, 1.0), spec.hand_step);

  const Eigen::Vector2d arm_xy(n.arm.x, n.arm.y);
  const double dyaw = n.arm.yaw - prev_yaw;

  if (spec.task == Task::Hooklid) {
    const double planar = (arm_xy - n.object).norm();
    const double to_hook = (n.hand - hand_hook()).norm();

    // collision with the lid: grip closed while still descending through the band
    if (!n.hook && !n.knocked && to_hook < spec.hand_tol && n.arm.z >= spec.knock_z_lo &&
        n.arm.z < spec.knock_z_hi && planar < spec.knock_planar)
      n.knocked = true;

    if (n.hook && !n.open) {
      if (to_hook > spec.hold_tol) {
        // grip slipped before the lid came free: rotation progress is lost
        n.hook = false;
        n.yaw_since_hook = 0.0;
      } else {
        n.yaw_since_hook += std::abs(dyaw);
        n.object_yaw = clampd(n.object_yaw + dyaw, -kPi, kPi);
        if (n.yaw_since_hook > spec.open_yaw) n.open = true;
      }
    }
    if (!n.hook && !n.open && !n.knocked && planar < spec.planar_tol &&
        to_hook < spec.hand_tol && n.arm.z < prev_z && n.arm.z < spec.hook_z) {
      n.hook = true;
      n.yaw_since_hook = 0.0;
    }
  } else {
    const double planar_obj = (arm_xy - n.object).norm();
    const double to_pinch = (n.hand - hand_pinch()).norm();
    const double to_open = (n.hand - hand_open()).norm();

    if (!n.grasp && planar_obj < spec.planar_tol && to_pinch < spec.hand_tol) {
      n.grasp = true;
      n.attached = true;
    }
    if (n.grasp && n.attached) {
      if (to_pinch <= spec.hold_tol)
        n.object = arm_xy;
      else
        n.attached = false;  // block released where it is
    }
    if (n.grasp && !n.place && (arm_xy - spec.place_zone).norm() < spec.planar_tol &&
        to_open < spec.hand_tol)
      n.place = true;
  }

  n.step = s.step + 1;
  return n;
}

bool phase_done(const EnvState& s, const std::string& phase) {
  if (phase == "hook") return s.hook;
  if (phase == "open") return s.open;
  if (phase == "grasp") return s.grasp;
  if (phase == "place") return s.place;
  throw std::invalid_argument("unknown phase: " + phase);
}

bool task_success(const TaskSpec& spec, const EnvState& s) {
  for (const std::string& p : spec.phase_names())
    if (!phase_done(s, p)) return false;
  return true;
}

}  // namespace dqrise
