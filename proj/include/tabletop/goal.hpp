#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tabletop/scene.hpp"

namespace tabletop {

/// Quadrants of the workspace. "top" is the y < 0.25 half (image row 0).
enum class AreaName : std::uint8_t { top_left, top_right, bottom_left, bottom_right };

inline constexpr std::array<AreaName, 4> kAllAreas = {AreaName::top_left, AreaName::top_right,
                                                      AreaName::bottom_left, AreaName::bottom_right};

inline std::string_view to_string(AreaName a) {
  switch (a) {
    case AreaName::top_left: return "top-left";
    case AreaName::top_right: return "top-right";
    case AreaName::bottom_left: return "bottom-left";
    case AreaName::bottom_right: return "bottom-right";
  }
  return "?";
}

inline AreaName area_from_string(std::string_view s) {
  for (AreaName a : kAllAreas) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown area '" + std::string(s) + "'");
}

inline Rect area_rect(AreaName a, const Rect& bounds) {
  const double mx = bounds.cx();
  const double my = bounds.cy();
  switch (a) {
    case AreaName::top_left: return {bounds.x0, bounds.y0, mx, my};
    case AreaName::top_right: return {mx, bounds.y0, bounds.x1, my};
    case AreaName::bottom_left: return {bounds.x0, my, mx, bounds.y1};
    case AreaName::bottom_right: return {mx, my, bounds.x1, bounds.y1};
  }
  return bounds;
}

/// Relative placement directions; "above" points toward the top of the image (-y).
enum class Direction : std::uint8_t { left, right, above, below };

inline constexpr std::array<Direction, 4> kAllDirections = {Direction::left, Direction::right, Direction::above,
                                                            Direction::below};

inline constexpr double kRelativeOffset = 0.1;

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::left: return "left";
    case Direction::right: return "right";
    case Direction::above: return "above";
    case Direction::below: return "below";
  }
  return "?";
}

inline Direction direction_from_string(std::string_view s) {
  for (Direction d : kAllDirections) {
    if (to_string(d) == s) return d;
  }
  throw std::invalid_argument("unknown direction '" + std::string(s) + "'");
}

inline std::pair<double, double> direction_vector(Direction d) {
  switch (d) {
    case Direction::left: return {-1.0, 0.0};
    case Direction::right: return {1.0, 0.0};
    case Direction::above: return {0.0, -1.0};
    case Direction::below: return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

enum class MatchMode : std::uint8_t { pose, zone };

inline std::string_view to_string(MatchMode m) { return m == MatchMode::pose ? "pose" : "zone"; }

// Target predicates of a sub-goal.

/// Zone match against any of the listed bowls/zones. `preferred` is the one the oracle uses.
struct InRegions {
  std::vector<int> regions;
  int preferred = -1;
  friend bool operator==(const InRegions&, const InRegions&) = default;
};

/// Zone match against a workspace quadrant.
struct InArea {
  AreaName area = AreaName::top_left;
  friend bool operator==(const InArea&, const InArea&) = default;
};

/// Resting directly on `base` and aligned with it (pose match).
struct OnBlock {
  int base = -1;
  friend bool operator==(const OnBlock&, const OnBlock&) = default;
};

/// Pose match at a fixed offset from a reference block, not resting on a block.
struct AtOffset {
  int reference = -1;
  Direction direction = Direction::left;
  double distance = kRelativeOffset;
  friend bool operator==(const AtOffset&, const AtOffset&) = default;
};

/// Not resting on another block.
struct OnTable {
  friend bool operator==(const OnTable&, const OnTable&) = default;
};

using Predicate = std::variant<InRegions, InArea, OnBlock, AtOffset, OnTable>;

struct SubGoal {
  int object = -1;
  Predicate predicate;
  /// Index of the sub-goal that must hold for this one to count (stacking chains).
  std::optional<std::size_t> depends_on;
  /// Unscored sub-goals are anchors: preconditions that do not contribute to the score.
  bool scored = true;

  MatchMode mode() const {
    return std::holds_alternative<InRegions>(predicate) || std::holds_alternative<InArea>(predicate)
               ? MatchMode::zone
               : MatchMode::pose;
  }

  friend bool operator==(const SubGoal&, const SubGoal&) = default;
};

inline Pose offset_target(const SceneState& s, const AtOffset& p) {
  const auto& ref = s.at(p.reference);
  const auto [dx, dy] = direction_vector(p.direction);
  return {ref.pose.x + dx * p.distance, ref.pose.y + dy * p.distance, 0.0};
}

inline bool resting_on_block(const SceneState& s, int id) {
  const auto& o = s.at(id);
  return o.supported_by && s.at(*o.supported_by).kind == ObjectKind::block;
}

struct GoalCondition {
  std::vector<SubGoal> sub_goals;
  MatchTolerance tolerance;
  Rect bounds{0.0, 0.0, 1.0, 0.5};

  friend bool operator==(const GoalCondition&, const GoalCondition&) = default;

  std::size_t scored_count() const {
    std::size_t n = 0;
    for (const auto& g : sub_goals) n += g.scored ? 1 : 0;
    return n;
  }

  /// The sub-goal's own predicate, ignoring its dependency.
  bool holds_locally(const SceneState& s, std::size_t i) const {
    const SubGoal& g = sub_goals.at(i);
    return std::visit(
        [&](const auto& p) -> bool {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, InRegions>) {
            for (int r : p.regions) {
              if (zone_match(s, g.object, r, tolerance.zone_threshold)) return true;
            }
            return false;
          } else if constexpr (std::is_same_v<P, InArea>) {
            return area_match(s, g.object, area_rect(p.area, bounds), tolerance.zone_threshold);
          } else if constexpr (std::is_same_v<P, OnBlock>) {
            const auto& o = s.at(g.object);
            if (!o.supported_by || *o.supported_by != p.base) return false;
            return pose_match(s, g.object, s.at(p.base).pose, tolerance.position, tolerance.yaw);
          } else if constexpr (std::is_same_v<P, AtOffset>) {
            if (resting_on_block(s, g.object)) return false;
            return pose_match(s, g.object, offset_target(s, p), tolerance.position, tolerance.yaw);
          } else {
            return !resting_on_block(s, g.object);
          }
        },
        g.predicate);
  }

  /// Per sub-goal satisfaction including dependency chains.
  std::vector<bool> evaluate(const SceneState& s) const {
    std::vector<int> memo(sub_goals.size(), -1);
    auto sat = [&](auto&& self, std::size_t i, std::size_t depth) -> bool {
      if (memo[i] >= 0) return memo[i] == 1;
      if (depth > sub_goals.size()) throw std::logic_error("sub-goal dependencies form a cycle");
      bool ok = holds_locally(s, i);
      if (ok && sub_goals[i].depends_on) ok = self(self, *sub_goals[i].depends_on, depth + 1);
      memo[i] = ok ? 1 : 0;
      return ok;
    };
    std::vector<bool> out(sub_goals.size());
    for (std::size_t i = 0; i < sub_goals.size(); ++i) out[i] = sat(sat, i, 0);
    return out;
  }

  std::size_t satisfied_count(const SceneState& s) const {
    const auto sat = evaluate(s);
    std::size_t n = 0;
    for (std::size_t i = 0; i < sub_goals.size(); ++i) n += (sub_goals[i].scored && sat[i]) ? 1 : 0;
    return n;
  }

  /// Satisfied scored sub-goals over total scored sub-goals.
  double satisfied_fraction(const SceneState& s) const {
    const std::size_t total = scored_count();
    if (total == 0) return 1.0;
    return static_cast<double>(satisfied_count(s)) / static_cast<double>(total);
  }

  bool done(const SceneState& s) const { return satisfied_count(s) == scored_count(); }
};

}  // namespace tabletop
