#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tabletop/goal.hpp"
#include "tabletop/rng.hpp"
#include "tabletop/subtask.hpp"
#include "tabletop/world.hpp"

namespace tabletop {

/// The goal can no longer be reached from the current state.
struct ReplanImpossible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Planning was requested on a state that already satisfies the goal.
struct AlreadyDone : std::runtime_error {
  AlreadyDone() : std::runtime_error("already done") {}
};

struct PlannedStep {
  SubTask subtask;
  Action action;
};

namespace placement {

inline constexpr double kContactSlack = 1e-6;

/// Interior overlap, with a little slack so that exactly touching footprints never collide.
inline bool collides(const Rect& a, const Rect& b) {
  return overlaps(a.inflated(-kContactSlack), b.inflated(-kContactSlack));
}

inline bool collides_with_blocks(const SceneState& s, const Rect& r, int ignore) {
  for (const auto& o : s.objects) {
    if (o.id == ignore || o.kind != ObjectKind::block) continue;
    if (collides(o.footprint(), r)) return true;
  }
  return false;
}

inline bool collides_with_anything(const SceneState& s, const Rect& r, int ignore, double margin) {
  for (const auto& o : s.objects) {
    if (o.id == ignore) continue;
    if (collides(o.footprint().inflated(margin), r)) return true;
  }
  return false;
}

/// Regions the goal wants to keep free of parked blocks.
inline std::vector<Rect> reserved_regions(const SceneState& s, const GoalCondition& goal) {
  std::vector<Rect> out;
  for (const auto& g : goal.sub_goals) {
    if (const auto* a = std::get_if<InArea>(&g.predicate)) out.push_back(area_rect(a->area, goal.bounds));
    if (const auto* r = std::get_if<AtOffset>(&g.predicate)) {
      const Pose p = offset_target(s, *r);
      out.push_back(Rect::centered(p.x, p.y, 0.5 * kBigBlockEdge, 0.5 * kBigBlockEdge).inflated(0.01));
    }
  }
  return out;
}

/// Free table spot nearest to the object's current position.
inline Pose table_spot(const SceneState& s, int obj, const GoalCondition* goal, const Rect& bounds) {
  const auto& o = s.at(obj);
  const double h = o.half_extent();
  const double margin = 0.005;
  const std::vector<Rect> reserved = goal ? reserved_regions(s, *goal) : std::vector<Rect>{};
  const double step = 0.02;
  for (int pass = 0; pass < 2; ++pass) {
    std::optional<Pose> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (double y = bounds.y0 + h + margin; y <= bounds.y1 - h - margin + 1e-12; y += step) {
      for (double x = bounds.x0 + h + margin; x <= bounds.x1 - h - margin + 1e-12; x += step) {
        const Rect fp = o.footprint_at(x, y);
        if (collides_with_anything(s, fp, obj, margin)) continue;
        if (pass == 0 && std::any_of(reserved.begin(), reserved.end(),
                                     [&](const Rect& r) { return collides(r, fp); })) {
          continue;
        }
        const double d = std::hypot(x - o.pose.x, y - o.pose.y);
        if (d < best_d) {
          best_d = d;
          best = Pose{x, y, o.pose.yaw};
        }
      }
    }
    if (best) return *best;
  }
  throw ReplanImpossible("no free table space to park " + describe(o));
}

/// Slot inside a bowl or zone that no other block occupies; the center when all are taken.
inline Pose region_slot(const SceneState& s, int obj, int region) {
  const auto& o = s.at(obj);
  const auto& r = s.at(region);
  const double reach = r.half_extent() - o.half_extent();
  const double d = std::min(reach, kBigBlockEdge);
  static constexpr int order[9][2] = {{0, 0}, {-1, -1}, {1, -1}, {-1, 1}, {1, 1}, {0, -1}, {0, 1}, {-1, 0}, {1, 0}};
  for (const auto& k : order) {
    const double x = r.pose.x + k[0] * d;
    const double y = r.pose.y + k[1] * d;
    if (!collides_with_blocks(s, o.footprint_at(x, y), obj)) return {x, y, o.pose.yaw};
  }
  return {r.pose.x, r.pose.y, o.pose.yaw};
}

/// Free spot inside a workspace quadrant, nearest to its center.
inline Pose area_spot(const SceneState& s, int obj, const Rect& area) {
  const auto& o = s.at(obj);
  const double h = o.half_extent();
  const double margin = 0.005;
  const double step = 0.025;
  for (int pass = 0; pass < 2; ++pass) {
    std::optional<Pose> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (double y = area.y0 + h + margin; y <= area.y1 - h - margin + 1e-12; y += step) {
      for (double x = area.x0 + h + margin; x <= area.x1 - h - margin + 1e-12; x += step) {
        const Rect fp = o.footprint_at(x, y);
        const bool blocked = pass == 0 ? collides_with_anything(s, fp, obj, margin) : collides_with_blocks(s, fp, obj);
        if (blocked) continue;
        const double d = std::hypot(x - area.cx(), y - area.cy());
        if (d < best_d) {
          best_d = d;
          best = Pose{x, y, o.pose.yaw};
        }
      }
    }
    if (best) return *best;
  }
  return {area.cx(), area.cy(), o.pose.yaw};
}

/// A point inside the object's footprint where a pick grabs this object.
inline Pose pick_point(const SceneState& s, int obj) {
  const auto& o = s.at(obj);
  auto t = s.topmost_at(o.pose.x, o.pose.y);
  if (t && *t == obj) return o.pose;
  const double h = o.half_extent();
  for (int j = -2; j <= 2; ++j) {
    for (int i = -2; i <= 2; ++i) {
      const double x = o.pose.x + 0.45 * h * i;
      const double y = o.pose.y + 0.45 * h * j;
      t = s.topmost_at(x, y);
      if (t && *t == obj) return {x, y, o.pose.yaw};
    }
  }
  return o.pose;
}

}  // namespace placement

/// Scripted low-level controller: the action that carries out `st` in the current scene.
inline Action oracle_act(const SceneState& s, const SubTask& st, const GoalCondition* goal, const Rect& bounds) {
  const int src = st.source.id.value();
  Action a;
  a.pick = placement::pick_point(s, src);
  switch (st.target.kind) {
    case TargetKind::object: {
      const auto& t = s.at(st.target.object->id.value());
      a.place = t.kind == ObjectKind::block ? t.pose : placement::region_slot(s, src, t.id);
      break;
    }
    case TargetKind::area: a.place = placement::area_spot(s, src, area_rect(*st.target.area, bounds)); break;
    case TargetKind::table: a.place = placement::table_spot(s, src, goal, bounds); break;
    case TargetKind::relative: {
      AtOffset rel{st.target.object->id.value(), *st.target.direction, kRelativeOffset};
      a.place = offset_target(s, rel);
      break;
    }
  }
  a.place.x = std::clamp(a.place.x, bounds.x0, bounds.x1);
  a.place.y = std::clamp(a.place.y, bounds.y0, bounds.y1);
  a.pick.yaw = wrap_angle(a.pick.yaw);
  a.place.yaw = wrap_angle(a.place.yaw);
  return a;
}

namespace detail {

inline SubTask relocate(const SceneState& s, int id) {
  return make_subtask(ObjectRef::of(s.at(id)), SubTaskTarget::table());
}

/// Indices of unsatisfied sub-goals whose dependency holds.
inline std::vector<std::size_t> ready_sub_goals(const SceneState& s, const GoalCondition& goal,
                                                const std::vector<bool>& sat) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < goal.sub_goals.size(); ++i) {
    if (sat[i]) continue;
    const auto& dep = goal.sub_goals[i].depends_on;
    if (dep && !sat[*dep]) continue;
    out.push_back(i);
  }
  (void)s;
  return out;
}

inline SubTask first_step(const SceneState& s, const GoalCondition& goal, std::size_t i, int depth = 0);

/// Move that clears `occ` off `covered`: the occluder's own pending sub-goal when that
/// does not land it back on the covered stack, otherwise a trip to the table.
inline SubTask clear(const SceneState& s, const GoalCondition& goal, int occ, int covered, int depth) {
  if (depth > 1) return relocate(s, occ);
  const auto sat = goal.evaluate(s);
  const auto above = s.stack_above(covered);
  for (std::size_t j = 0; j < goal.sub_goals.size(); ++j) {
    const SubGoal& g = goal.sub_goals[j];
    if (g.object != occ || sat[j] || (g.depends_on && !sat[*g.depends_on])) continue;
    if (std::holds_alternative<OnTable>(g.predicate)) continue;
    SubTask st = first_step(s, goal, j, depth + 1);
    if (st.source.id != occ || st.target.kind == TargetKind::table) continue;
    const Action a = oracle_act(s, st, &goal, goal.bounds);
    const auto under = s.topmost_at(a.place.x, a.place.y, {occ});
    if (under && (*under == covered || std::find(above.begin(), above.end(), *under) != above.end())) continue;
    if (s.at(covered).footprint().contains(a.place.x, a.place.y)) continue;
    return st;
  }
  return relocate(s, occ);
}

/// First move toward sub-goal `i`: either the move itself or clearing something in its way.
inline SubTask first_step(const SceneState& s, const GoalCondition& goal, std::size_t i, int depth) {
  const SubGoal& g = goal.sub_goals[i];
  if (auto occ = s.occluder_of(g.object)) return clear(s, goal, *occ, g.object, depth);
  const ObjectRef src = ObjectRef::of(s.at(g.object));
  return std::visit(
      [&](const auto& p) -> SubTask {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, InRegions>) {
          return make_subtask(src, SubTaskTarget::on_object(s.at(p.preferred)));
        } else if constexpr (std::is_same_v<P, InArea>) {
          return make_subtask(src, SubTaskTarget::in_area(p.area));
        } else if constexpr (std::is_same_v<P, OnBlock>) {
          if (auto occ = s.occluder_of(p.base)) return clear(s, goal, *occ, p.base, depth);
          return make_subtask(src, SubTaskTarget::on_object(s.at(p.base)));
        } else if constexpr (std::is_same_v<P, AtOffset>) {
          const Pose t = offset_target(s, p);
          const Rect spot = s.at(g.object).footprint_at(t.x, t.y).inflated(0.002);
          for (const auto& o : s.objects) {
            if (o.id == g.object || o.kind != ObjectKind::block) continue;
            if (!placement::collides(o.footprint(), spot)) continue;
            auto occ = s.occluder_of(o.id);
            return relocate(s, occ ? *occ : o.id);
          }
          return make_subtask(src, SubTaskTarget::relative_to(s.at(p.reference), p.direction));
        } else {
          return relocate(s, g.object);
        }
      },
      g.predicate);
}

inline void add_unique(std::vector<SubTask>& v, SubTask st) {
  if (!subtask_equivalent(st, v)) v.push_back(std::move(st));
}

}  // namespace detail

/// Sub-tasks that start at least one valid completion from this state.
struct ValidNext {
  bool already_done = false;
  std::vector<SubTask> options;
};

inline ValidNext valid_next_subtasks(const SceneState& s, const GoalCondition& goal) {
  ValidNext out;
  const auto sat = goal.evaluate(s);
  if (goal.done(s)) {
    out.already_done = true;
    return out;
  }
  for (std::size_t i : detail::ready_sub_goals(s, goal, sat)) {
    SubTask st = detail::first_step(s, goal, i);
    const SubGoal& g = goal.sub_goals[i];
    const bool direct = st.source.id == g.object && st.target.kind != TargetKind::table;
    detail::add_unique(out.options, st);
    if (const auto* r = std::get_if<InRegions>(&g.predicate); r && direct) {
      for (int region : r->regions) {
        detail::add_unique(out.options,
                           make_subtask(ObjectRef::of(s.at(g.object)), SubTaskTarget::on_object(s.at(region))));
      }
    }
  }
  return out;
}

/// The oracle's next sub-task and action; unconstrained choices are drawn from `rng`.
inline PlannedStep oracle_next(const SceneState& s, const GoalCondition& goal, Rng& rng) {
  if (goal.done(s)) throw AlreadyDone();
  const auto sat = goal.evaluate(s);
  const auto ready = detail::ready_sub_goals(s, goal, sat);
  if (ready.empty()) throw ReplanImpossible("no sub-goal can be started");
  const std::size_t pick = ready[uniform_index(rng, ready.size())];
  PlannedStep out;
  out.subtask = detail::first_step(s, goal, pick);
  out.action = oracle_act(s, out.subtask, &goal, goal.bounds);
  return out;
}

inline std::size_t decomposition_step_cap(const SceneState& s, const GoalCondition& goal) {
  return 3 * goal.sub_goals.size() + 2 * s.objects.size() + 20;
}

/// Full dependency-ordered decomposition from `s`, simulated without disturbances.
inline std::vector<PlannedStep> oracle_decompose(const SceneState& s, const GoalCondition& goal,
                                                 const WorkspaceConfig& cfg, Rng& rng) {
  WorkspaceConfig quiet = cfg;
  quiet.drop_probability = 0.0;
  Rng unused(0);
  std::vector<PlannedStep> plan;
  SceneState cur = s;
  const std::size_t cap = decomposition_step_cap(s, goal);
  while (!goal.done(cur)) {
    if (plan.size() >= cap) throw ReplanImpossible("oracle did not converge within " + std::to_string(cap) + " steps");
    PlannedStep next = oracle_next(cur, goal, rng);
    cur = step(cur, next.action, goal, quiet, unused).state;
    plan.push_back(std::move(next));
  }
  return plan;
}

}  // namespace tabletop
