#include "dqrise/expert.hpp"

#include <algorithm>
#include <cmath>

namespace dqrise {
namespace {

Hand lerp_hand(const Hand& a, const Hand& b, double f) { return a + f * (b - a); }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Grip schedule for the hooklid descent, keyed on current arm height. The
// hand stays at 75% closure (L2 distance ~0.33 from HOOK) through the
// collision band and only closes fully below it.
double hook_frac(double z) {
  if (z <= 0.40) return 1.0;
  if (z <= 0.64) return 0.75;
  return 0.75 * clamp01((1.0 - z) / (1.0 - 0.64));
}

struct Cmd {
  ArmState arm;
  Hand hand;
};

Cmd hooklid_expert(const TaskSpec& spec, const EnvState& s) {
  const Eigen::Vector2d lid = s.object;
  const Eigen::Vector2d arm_xy(s.arm.x, s.arm.y);
  const double planar_err = (arm_xy - lid).norm();
  Cmd c;
  if (s.open) {  // done; hold still until the episode closes out
    c.arm = s.arm;
    c.hand = hand_hook();
  } else if (s.hook) {  // rotate the lid free
    c.arm = {lid.x(), lid.y(), s.arm.z, 1.5};
    c.hand = hand_hook();
  } else if (planar_err > 0.03) {  // get above the lid first
    double ztgt = planar_err >= 0.2 ? 0.75 : s.arm.z;
    c.arm = {lid.x(), lid.y(), ztgt, 0.0};
    c.hand = lerp_hand(hand_open(), hand_hook(), hook_frac(s.arm.z));
  } else {  // descend through the band, close late, press to seat the hook
    c.arm = {lid.x(), lid.y(), 0.10, 0.0};
    c.hand = lerp_hand(hand_open(), hand_hook(), hook_frac(s.arm.z));
  }
  return c;
}

Cmd pickplace_expert(const TaskSpec& spec, const EnvState& s) {
  const Eigen::Vector2d arm_xy(s.arm.x, s.arm.y);
  Cmd c;
  if (s.place) {
    c.arm = s.arm;
    c.hand = hand_open();
  } else if (s.grasp) {
    const double zone_err = (arm_xy - spec.place_zone).norm();
    c.arm = {spec.place_zone.x(), spec.place_zone.y(), 0.6, 0.0};
    c.hand = zone_err > 0.03 ? hand_pinch() : hand_open();
  } else {
    const double planar_err = (arm_xy - s.object).norm();
    if (planar_err > 0.03) {
      c.arm = {s.object.x(), s.object.y(), 0.7, 0.0};
      c.hand = hand_open();
    } else {
      c.arm = {s.object.x(), s.object.y(), 0.25, 0.0};
      double f = clamp01((0.7 - s.arm.z) / (0.7 - 0.34));
      c.hand = lerp_hand(hand_open(), hand_pinch(), f);
    }
  }
  return c;
}

}  // namespace

std::pair<ArmState, Hand> expert_policy(const TaskSpec& spec, const EnvState& s, Rng& rng,
                                        const ExpertConfig& cfg) {
  Cmd c = spec.task == Task::Hooklid ? hooklid_expert(spec, s) : pickplace_expert(spec, s);
  if (cfg.premature_hand && spec.task == Task::Hooklid && !s.hook && !s.open)
    c.hand = hand_hook();
  c.arm.x += cfg.pos_jitter * rng.normal();
  c.arm.y += cfg.pos_jitter * rng.normal();
  c.arm.z += cfg.pos_jitter * rng.normal();
  c.arm.yaw += cfg.pos_jitter * rng.normal();
  for (int j = 0; j < 6; ++j) c.hand[j] = clamp01(c.hand[j] + cfg.hand_jitter * rng.normal());
  return {c.arm, c.hand};
}

}  // namespace dqrise
