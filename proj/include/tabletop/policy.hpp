#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tabletop/oracle.hpp"
#include "tabletop/render.hpp"
#include "tabletop/rng.hpp"
#include "tabletop/subtask.hpp"
#include "tabletop/world.hpp"

namespace tabletop {

class PolicyError : public std::runtime_error {
 public:
  enum class Kind { timeout, malformed_frame, out_of_range_tokens, error_frame, process_failure, missing_symbolic };

  PolicyError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline std::string_view to_string(PolicyError::Kind k) {
  switch (k) {
    case PolicyError::Kind::timeout: return "timeout";
    case PolicyError::Kind::malformed_frame: return "malformed_frame";
    case PolicyError::Kind::out_of_range_tokens: return "out_of_range_tokens";
    case PolicyError::Kind::error_frame: return "error_frame";
    case PolicyError::Kind::process_failure: return "process_failure";
    case PolicyError::Kind::missing_symbolic: return "missing_symbolic";
  }
  return "?";
}

/// plan: next sub-task given observation and goal. act: action given the sub-task as context.
/// A flat (non-hierarchical) policy is an act() that ignores its sub-task argument.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual SubTask plan(const Observation& obs, std::string_view goal) = 0;
  virtual Action act(const Observation& obs, std::string_view goal, const SubTask& subtask) = 0;
  /// Whether observations must carry rendered images (the symbolic channel is always attached).
  virtual bool wants_rasters() const { return false; }
};

namespace detail {

inline const SymbolicSnapshot& require_symbolic(const Observation& obs) {
  if (!obs.symbolic) throw PolicyError(PolicyError::Kind::missing_symbolic, "oracle requires symbolic channel");
  return *obs.symbolic;
}

}  // namespace detail

/// Rule-based expert reading the privileged symbolic channel.
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(std::uint64_t seed) : rng_(seed) {}

  /// Throws AlreadyDone on a solved scene and ReplanImpossible when no move helps.
  SubTask plan(const Observation& obs, std::string_view) override {
    const auto& sym = detail::require_symbolic(obs);
    return oracle_next(sym.scene, sym.goal, rng_).subtask;
  }

  Action act(const Observation& obs, std::string_view, const SubTask& subtask) override {
    const auto& sym = detail::require_symbolic(obs);
    SubTask st;
    try {
      st = resolve(subtask, sym.scene);
    } catch (const SubTaskResolutionError&) {
      // A dangling or ambiguous selector still yields an action; aim at the table center.
      const Pose c{0.5 * (sym.goal.bounds.x0 + sym.goal.bounds.x1), 0.5 * (sym.goal.bounds.y0 + sym.goal.bounds.y1), 0};
      return {c, c};
    }
    return oracle_act(sym.scene, st, &sym.goal, sym.goal.bounds);
  }

 private:
  Rng rng_;
};

struct NoiseConfig {
  double eps_plan = 0.0;
  double eps_act = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(eps_plan >= 0.0 && eps_plan <= 1.0)) throw std::invalid_argument("eps_plan must lie in [0, 1]");
    if (!(eps_act >= 0.0 && eps_act <= 1.0)) throw std::invalid_argument("eps_act must lie in [0, 1]");
  }
};

/// Every sub-task the task could phrase: any block moved onto another object, to the
/// table, into a quadrant (when the goal uses quadrants) or beside a reference block (when
/// the goal uses relative placement).
inline std::vector<SubTask> subtask_space(const SceneState& s, const GoalCondition& goal) {
  bool uses_areas = false;
  std::vector<int> references;
  for (const auto& g : goal.sub_goals) {
    if (std::holds_alternative<InArea>(g.predicate)) uses_areas = true;
    if (const auto* p = std::get_if<AtOffset>(&g.predicate)) {
      if (std::find(references.begin(), references.end(), p->reference) == references.end()) {
        references.push_back(p->reference);
      }
    }
  }
  std::vector<SubTask> out;
  for (const auto& src : s.objects) {
    if (src.kind != ObjectKind::block) continue;
    const ObjectRef ref = ObjectRef::of(src);
    for (const auto& dst : s.objects) {
      if (dst.id == src.id) continue;
      out.push_back(make_subtask(ref, SubTaskTarget::on_object(dst)));
    }
    out.push_back(make_subtask(ref, SubTaskTarget::table()));
    if (uses_areas) {
      for (AreaName a : kAllAreas) out.push_back(make_subtask(ref, SubTaskTarget::in_area(a)));
    }
    for (int r : references) {
      if (r == src.id) continue;
      for (Direction d : kAllDirections) out.push_back(make_subtask(ref, SubTaskTarget::relative_to(s.at(r), d)));
    }
  }
  return out;
}

/// Wraps a policy with seeded planning errors (a wrong but well-formed sub-task) and
/// action errors (the place pose pushed 0.02-0.05 m off).
class NoisyPolicy : public Policy {
 public:
  struct Counters {
    std::size_t plan_calls = 0;
    std::size_t plan_corruptions = 0;
    std::size_t act_calls = 0;
    std::size_t act_corruptions = 0;
  };

  static constexpr double kMinOffset = 0.02;
  static constexpr double kMaxOffset = 0.05;

  NoisyPolicy(std::unique_ptr<Policy> inner, NoiseConfig cfg) : inner_(std::move(inner)), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
  }

  SubTask plan(const Observation& obs, std::string_view goal) override {
    SubTask st = inner_->plan(obs, goal);
    ++counters_.plan_calls;
    if (!bernoulli(rng_, cfg_.eps_plan)) return st;
    const auto& sym = detail::require_symbolic(obs);
    const auto valid = valid_next_subtasks(sym.scene, sym.goal).options;
    std::vector<SubTask> wrong;
    for (auto& cand : subtask_space(sym.scene, sym.goal)) {
      if (!subtask_equivalent(cand, valid)) wrong.push_back(std::move(cand));
    }
    if (wrong.empty()) return st;
    ++counters_.plan_corruptions;
    return wrong[uniform_index(rng_, wrong.size())];
  }

  Action act(const Observation& obs, std::string_view goal, const SubTask& subtask) override {
    Action a = inner_->act(obs, goal, subtask);
    ++counters_.act_calls;
    if (!bernoulli(rng_, cfg_.eps_act)) return a;
    ++counters_.act_corruptions;
    const Rect bounds = obs.symbolic ? obs.symbolic->goal.bounds : Rect{0.0, 0.0, 1.0, 0.5};
    const double mag = uniform(rng_, kMinOffset, kMaxOffset);
    const double theta = uniform(rng_, -kPi, kPi);
    a.place = displaced(a.place, mag, theta, bounds);
    return a;
  }

  bool wants_rasters() const override { return inner_->wants_rasters(); }

  const Counters& counters() const { return counters_; }
  Policy& inner() { return *inner_; }

  /// Moves `p` by `mag` along `theta`, turning around when the table edge would eat into the
  /// offset.
  static Pose displaced(Pose p, double mag, double theta, const Rect& bounds) {
    auto shifted = [&](double sign) {
      Pose q = p;
      q.x = std::clamp(p.x + sign * mag * std::cos(theta), bounds.x0, bounds.x1);
      q.y = std::clamp(p.y + sign * mag * std::sin(theta), bounds.y0, bounds.y1);
      return q;
    };
    const Pose fwd = shifted(1.0);
    if (std::hypot(fwd.x - p.x, fwd.y - p.y) >= mag - 1e-12) return fwd;
    const Pose back = shifted(-1.0);
    return std::hypot(back.x - p.x, back.y - p.y) > std::hypot(fwd.x - p.x, fwd.y - p.y) ? back : fwd;
  }

 private:
  std::unique_ptr<Policy> inner_;
  NoiseConfig cfg_;
  Rng rng_;
  Counters counters_;
};

inline std::unique_ptr<Policy> with_noise(std::unique_ptr<Policy> inner, const NoiseConfig& cfg) {
  return std::make_unique<NoisyPolicy>(std::move(inner), cfg);
}

}  // namespace tabletop
