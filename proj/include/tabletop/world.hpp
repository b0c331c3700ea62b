#pragma once

#include <algorithm>
#include <stdexcept>

#include "tabletop/goal.hpp"
#include "tabletop/rng.hpp"
#include "tabletop/scene.hpp"

namespace tabletop {

/// One pick-and-place motion of the suction gripper.
struct Action {
  Pose pick;
  Pose place;
  friend bool operator==(const Action&, const Action&) = default;
};

struct StepOutcome {
  /// Newly credited goal fraction.
  double reward = 0.0;
  bool done = false;
  bool drop_event = false;
  /// The pick attached to a graspable object.
  bool executed = false;
  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

struct StepResult {
  SceneState state;
  StepOutcome outcome;
};

inline bool action_in_bounds(const Action& a, const Rect& bounds) {
  return bounds.contains(a.pick.x, a.pick.y) && bounds.contains(a.place.x, a.place.y) &&
         std::isfinite(a.pick.yaw) && std::isfinite(a.place.yaw);
}

namespace detail {

/// Lets everything resting directly on `lifted` fall straight down onto whatever is below.
inline void release_occupants(SceneState& s, int lifted) {
  for (int c : s.children(lifted)) {
    std::vector<int> exclude = s.stack_above(c);
    exclude.push_back(c);
    exclude.push_back(lifted);
    const auto& o = s.at(c);
    // Resolve the new supporter before detaching so elevations of `exclude` do not matter.
    std::optional<int> below = s.topmost_at(o.pose.x, o.pose.y, exclude);
    s.at(c).supported_by = below;
  }
}

inline Pose clamp_to_bounds(const Pose& p, double half, const Rect& bounds) {
  return {std::clamp(p.x, bounds.x0 + half, bounds.x1 - half), std::clamp(p.y, bounds.y0 + half, bounds.y1 - half),
          wrap_angle(p.yaw)};
}

}  // namespace detail

/// Sets `obj` down at (x, y) on top of whatever occupies that point.
inline void set_down(SceneState& s, int obj, Pose where, const Rect& bounds) {
  auto& o = s.at(obj);
  where = detail::clamp_to_bounds(where, o.half_extent(), bounds);
  std::vector<int> exclude = s.stack_above(obj);
  exclude.push_back(obj);
  const std::optional<int> below = s.topmost_at(where.x, where.y, exclude);
  o.pose = where;
  o.supported_by = below;
}

/// Executes one pick-and-place action. Rewards are paid on increases of the
/// goal's satisfied fraction over the highest fraction credited so far.
inline StepResult step(const SceneState& state, const Action& action, const GoalCondition& goal,
                       const WorkspaceConfig& cfg, Rng& rng) {
  if (!action_in_bounds(action, cfg.bounds)) throw std::invalid_argument("action pose outside workspace bounds");

  StepResult r{state, {}};
  SceneState& s = r.state;
  s.time += 1;

  const std::optional<int> picked = s.topmost_at(action.pick.x, action.pick.y);
  if (picked && s.at(*picked).graspable()) {
    r.outcome.executed = true;
    const int id = *picked;
    detail::release_occupants(s, id);
    s.at(id).supported_by.reset();

    Pose landing = action.place;
    for (int sub = 0; sub < cfg.transport_substeps; ++sub) {
      if (cfg.drop_probability > 0.0 && bernoulli(rng, cfg.drop_probability)) {
        const double t = (sub + uniform01(rng)) / cfg.transport_substeps;
        landing.x = action.pick.x + t * (action.place.x - action.pick.x);
        landing.y = action.pick.y + t * (action.place.y - action.pick.y);
        r.outcome.drop_event = true;
        break;
      }
    }
    const ObjectInstance& o = s.at(id);
    landing.yaw = wrap_angle(o.pose.yaw + action.place.yaw - action.pick.yaw);
    set_down(s, id, landing, cfg.bounds);
  }

  const std::size_t total = goal.scored_count();
  const std::size_t satisfied = goal.satisfied_count(s);
  const double fraction = total == 0 ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(total);
  if (fraction > s.credited_fraction) {
    r.outcome.reward = fraction - s.credited_fraction;
    s.credited_fraction = fraction;
  }
  r.outcome.done = satisfied == total;
  return r;
}

}  // namespace tabletop
