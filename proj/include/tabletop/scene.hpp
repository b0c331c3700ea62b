#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tabletop/geometry.hpp"

namespace tabletop {

enum class ObjectKind : std::uint8_t { block, bowl, zone };

enum class BlockSize : std::uint8_t { small, big };

enum class Color : std::uint8_t { red, green, blue, yellow, orange, purple, pink, cyan, brown, gray, white };

inline constexpr std::size_t kColorCount = 11;

inline constexpr std::array<Color, kColorCount> kAllColors = {
    Color::red,    Color::green, Color::blue,  Color::yellow, Color::orange, Color::purple,
    Color::pink,   Color::cyan,  Color::brown, Color::gray,   Color::white};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline std::string_view to_string(Color c) {
  static constexpr std::array<std::string_view, kColorCount> names = {
      "red", "green", "blue", "yellow", "orange", "purple", "pink", "cyan", "brown", "gray", "white"};
  return names[static_cast<std::size_t>(c)];
}

inline std::string_view to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::block: return "block";
    case ObjectKind::bowl: return "bowl";
    case ObjectKind::zone: return "zone";
  }
  return "?";
}

inline std::string_view to_string(BlockSize s) { return s == BlockSize::big ? "big" : "small"; }

inline Color color_from_string(std::string_view s) {
  for (Color c : kAllColors) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown color '" + std::string(s) + "'");
}

inline ObjectKind kind_from_string(std::string_view s) {
  if (s == "block") return ObjectKind::block;
  if (s == "bowl") return ObjectKind::bowl;
  if (s == "zone") return ObjectKind::zone;
  throw std::invalid_argument("unknown object kind '" + std::string(s) + "'");
}

inline BlockSize size_from_string(std::string_view s) {
  if (s == "big") return BlockSize::big;
  if (s == "small") return BlockSize::small;
  throw std::invalid_argument("unknown block size '" + std::string(s) + "'");
}

inline Rgb palette(Color c) {
  static constexpr std::array<Rgb, kColorCount> table = {{
      {255, 87, 89},    // red
      {89, 169, 79},    // green
      {78, 121, 167},   // blue
      {237, 201, 72},   // yellow
      {242, 142, 43},   // orange
      {176, 122, 161},  // purple
      {255, 157, 167},  // pink
      {118, 183, 178},  // cyan
      {156, 117, 95},   // brown
      {186, 176, 172},  // gray
      {245, 245, 245},  // white
  }};
  return table[static_cast<std::size_t>(c)];
}

inline constexpr Rgb kTableColor{48, 48, 48};

// Object geometry, meters.
inline constexpr double kBigBlockEdge = 0.04;
inline constexpr double kSmallBlockEdge = 0.02;
inline constexpr double kBowlDiameter = 0.12;
inline constexpr double kZoneEdge = 0.12;
inline constexpr double kBowlRimHeight = 0.03;
inline constexpr double kBowlFloorHeight = 0.005;
inline constexpr double kZoneHeight = 0.001;

/// Workspace and simulator parameters.
struct WorkspaceConfig {
  Rect bounds{0.0, 0.0, 1.0, 0.5};
  int raster_width = 320;
  int raster_height = 160;
  double pixels_per_meter = 320.0;
  /// Per transport sub-step drop hazard.
  double drop_probability = 0.0;
  int transport_substeps = 3;
  double obs_noise_sigma = 0.002;
  bool depth_noise = true;
  bool color_noise = true;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (raster_width != static_cast<int>(bounds.width() * pixels_per_meter) ||
        raster_height != static_cast<int>(bounds.height() * pixels_per_meter) ||
        static_cast<double>(raster_width) != bounds.width() * pixels_per_meter ||
        static_cast<double>(raster_height) != bounds.height() * pixels_per_meter) {
      throw std::invalid_argument("raster size must equal workspace bounds times pixels_per_meter");
    }
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
      throw std::invalid_argument("drop_probability must lie in [0, 1]");
    }
    if (!(obs_noise_sigma >= 0.0)) throw std::invalid_argument("obs_noise_sigma must be >= 0");
    if (transport_substeps < 1) throw std::invalid_argument("transport_substeps must be >= 1");
  }
};

struct ObjectInstance {
  int id = 0;
  ObjectKind kind = ObjectKind::block;
  Color color = Color::red;
  BlockSize size = BlockSize::big;  // meaningful for blocks only
  Pose pose;
  std::optional<int> supported_by;

  /// Half extent of the axis-aligned square footprint.
  double half_extent() const {
    switch (kind) {
      case ObjectKind::block: return 0.5 * (size == BlockSize::big ? kBigBlockEdge : kSmallBlockEdge);
      case ObjectKind::bowl: return 0.5 * kBowlDiameter;
      case ObjectKind::zone: return 0.5 * kZoneEdge;
    }
    return 0.0;
  }

  /// Vertical thickness counted by whatever rests on it.
  double support_height() const {
    switch (kind) {
      case ObjectKind::block: return 2.0 * half_extent();
      case ObjectKind::bowl: return kBowlFloorHeight;
      case ObjectKind::zone: return kZoneHeight;
    }
    return 0.0;
  }

  Rect footprint() const { return Rect::centered(pose.x, pose.y, half_extent(), half_extent()); }

  Rect footprint_at(double x, double y) const { return Rect::centered(x, y, half_extent(), half_extent()); }

  bool graspable() const { return kind == ObjectKind::block; }

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

/// Human-readable description, e.g. "small red block" or "blue bowl".
inline std::string describe(const ObjectInstance& o) {
  std::string s;
  if (o.kind == ObjectKind::block) {
    s += to_string(o.size);
    s += ' ';
  }
  s += to_string(o.color);
  s += ' ';
  s += to_string(o.kind);
  return s;
}

/// Full symbolic world. Object ids equal their index in `objects`.
struct SceneState {
  std::vector<ObjectInstance> objects;
  int time = 0;
  /// Highest satisfied-goal fraction credited so far; rewards are paid on increases.
  double credited_fraction = 0.0;

  friend bool operator==(const SceneState&, const SceneState&) = default;

  bool has(int id) const { return id >= 0 && static_cast<std::size_t>(id) < objects.size(); }

  const ObjectInstance& at(int id) const {
    if (!has(id)) throw std::out_of_range("no such object: " + std::to_string(id));
    return objects[static_cast<std::size_t>(id)];
  }

  ObjectInstance& at(int id) {
    if (!has(id)) throw std::out_of_range("no such object: " + std::to_string(id));
    return objects[static_cast<std::size_t>(id)];
  }

  int add(ObjectInstance o) {
    o.id = static_cast<int>(objects.size());
    objects.push_back(o);
    return o.id;
  }

  /// Height of the object's bottom above the table.
  double elevation(int id) const {
    double z = 0.0;
    std::optional<int> s = at(id).supported_by;
    std::size_t guard = 0;
    while (s) {
      const auto& sup = at(*s);
      z += sup.support_height();
      s = sup.supported_by;
      if (++guard > objects.size()) throw std::logic_error("support graph has a cycle");
    }
    return z;
  }

  double top(int id) const { return elevation(id) + at(id).support_height(); }

  std::vector<int> children(int id) const {
    std::vector<int> out;
    for (const auto& o : objects) {
      if (o.supported_by && *o.supported_by == id) out.push_back(o.id);
    }
    return out;
  }

  /// The object whose footprint contains (x, y) and whose top surface is highest.
  /// Ties go to the larger id (the one placed later in the painter's order).
  std::optional<int> topmost_at(double x, double y, const std::vector<int>& exclude = {}) const {
    std::optional<int> best;
    double best_top = -1.0;
    for (const auto& o : objects) {
      if (std::find(exclude.begin(), exclude.end(), o.id) != exclude.end()) continue;
      if (!o.footprint().contains(x, y)) continue;
      const double t = top(o.id);
      if (t >= best_top) {
        best_top = t;
        best = o.id;
      }
    }
    return best;
  }

  /// All objects resting (transitively) on `id`, bottom-up order.
  std::vector<int> stack_above(int id) const {
    std::vector<int> out;
    std::vector<int> frontier{id};
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int f : frontier) {
        for (int c : children(f)) {
          out.push_back(c);
          next.push_back(c);
        }
      }
      frontier = std::move(next);
    }
    return out;
  }

  /// Nothing rests on the object and it is what a pick at its center would grab.
  bool accessible(int id) const {
    if (!children(id).empty()) return false;
    const auto& o = at(id);
    auto t = topmost_at(o.pose.x, o.pose.y);
    return t && *t == id;
  }

  /// The block that must be removed first so that `id` becomes accessible, if any.
  std::optional<int> occluder_of(int id) const {
    int cur = id;
    for (std::size_t guard = 0; guard <= objects.size(); ++guard) {
      auto kids = children(cur);
      if (!kids.empty()) {
        cur = kids.front();
        continue;
      }
      const auto& o = at(cur);
      auto t = topmost_at(o.pose.x, o.pose.y);
      if (t && *t != cur && at(*t).kind == ObjectKind::block) {
        cur = *t;
        continue;
      }
      return cur == id ? std::nullopt : std::optional<int>(cur);
    }
    return cur == id ? std::nullopt : std::optional<int>(cur);
  }

  std::vector<int> ids_of_kind(ObjectKind k) const {
    std::vector<int> out;
    for (const auto& o : objects) {
      if (o.kind == k) out.push_back(o.id);
    }
    return out;
  }
};

/// Validates the structural invariants of a scene.
inline void validate_scene(const SceneState& s, const WorkspaceConfig& cfg) {
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto& o = s.objects[i];
    if (o.id != static_cast<int>(i)) throw std::logic_error("object id does not match its index");
    if (o.kind != ObjectKind::block && o.supported_by) {
      throw std::logic_error("bowls and zones cannot rest on other objects");
    }
    if (!cfg.bounds.inflated(o.half_extent() + 1e-9).contains(o.footprint())) {
      throw std::logic_error("object " + std::to_string(o.id) + " lies outside the workspace");
    }
    if (o.supported_by && !s.has(*o.supported_by)) throw std::logic_error("dangling support reference");
    (void)s.elevation(o.id);  // throws on cycles
  }
}

struct MatchTolerance {
  double position = 0.01;
  double yaw = 15.0 * kPi / 180.0;
  double zone_threshold = 0.5;
  friend bool operator==(const MatchTolerance&, const MatchTolerance&) = default;
};

/// Yaw difference folded by the object's rotational symmetry.
inline double yaw_error(double a, double b, bool square_symmetric) {
  double e = std::abs(wrap_angle(a - b));
  if (square_symmetric) {
    e = std::fmod(e, kPi / 2.0);
    e = std::min(e, kPi / 2.0 - e);
  }
  return e;
}

/// Position and orientation agree within tolerance.
inline bool pose_match(const SceneState& s, int obj_id, const Pose& target, double tol_pos, double tol_yaw,
                       bool square_symmetric = true) {
  const auto& o = s.at(obj_id);
  const double dx = o.pose.x - target.x;
  const double dy = o.pose.y - target.y;
  if (std::hypot(dx, dy) > tol_pos) return false;
  return yaw_error(o.pose.yaw, target.yaw, square_symmetric && o.kind == ObjectKind::block) <= tol_yaw;
}

/// Fraction of the object's footprint that lies inside `region`.
inline double overlap_fraction(const ObjectInstance& o, const Rect& region) {
  const Rect fp = o.footprint();
  return intersection_area(fp, region) / fp.area();
}

inline bool zone_match(const SceneState& s, int obj_id, int zone_id, double threshold) {
  const auto& z = s.at(zone_id);
  if (z.kind == ObjectKind::block) throw std::invalid_argument("zone_match target must be a zone or bowl");
  const auto& o = s.at(obj_id);
  if (o.kind != ObjectKind::block) throw std::invalid_argument("zone_match object must be a block");
  return overlap_fraction(o, z.footprint()) > threshold;
}

inline bool area_match(const SceneState& s, int obj_id, const Rect& area, double threshold) {
  const auto& o = s.at(obj_id);
  if (o.kind != ObjectKind::block) throw std::invalid_argument("area match object must be a block");
  return overlap_fraction(o, area) > threshold;
}

}  // namespace tabletop
