#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabletop/goal.hpp"
#include "tabletop/scene.hpp"

namespace tabletop {

/// Selector for one object. `id` is authoritative; the attributes exist for rendering
/// and for resolving selectors that arrive without an id.
struct ObjectRef {
  std::optional<int> id;
  ObjectKind kind = ObjectKind::block;
  Color color = Color::red;
  std::optional<BlockSize> size;

  static ObjectRef of(const ObjectInstance& o) {
    ObjectRef r{o.id, o.kind, o.color, std::nullopt};
    if (o.kind == ObjectKind::block) r.size = o.size;
    return r;
  }

  friend bool operator==(const ObjectRef&, const ObjectRef&) = default;
};

enum class TargetKind : std::uint8_t { object, area, table, relative };

inline std::string_view to_string(TargetKind k) {
  switch (k) {
    case TargetKind::object: return "object";
    case TargetKind::area: return "area";
    case TargetKind::table: return "table";
    case TargetKind::relative: return "relative";
  }
  return "?";
}

inline TargetKind target_kind_from_string(std::string_view s) {
  if (s == "object") return TargetKind::object;
  if (s == "area") return TargetKind::area;
  if (s == "table") return TargetKind::table;
  if (s == "relative") return TargetKind::relative;
  throw std::invalid_argument("unknown target kind '" + std::string(s) + "'");
}

struct SubTaskTarget {
  TargetKind kind = TargetKind::table;
  std::optional<ObjectRef> object;  // object target, or the reference block of a relative target
  std::optional<AreaName> area;
  std::optional<Direction> direction;

  static SubTaskTarget on_object(const ObjectInstance& o) { return {TargetKind::object, ObjectRef::of(o), {}, {}}; }
  static SubTaskTarget in_area(AreaName a) { return {TargetKind::area, std::nullopt, a, std::nullopt}; }
  static SubTaskTarget table() { return {}; }
  static SubTaskTarget relative_to(const ObjectInstance& ref, Direction d) {
    return {TargetKind::relative, ObjectRef::of(ref), std::nullopt, d};
  }

  friend bool operator==(const SubTaskTarget&, const SubTaskTarget&) = default;
};

/// One atomic pick-and-place instruction. The structured fields are ground truth;
/// `text` is rendered from them.
struct SubTask {
  std::string verb = "pick_place";
  ObjectRef source;
  SubTaskTarget target;
  std::string text;

  friend bool operator==(const SubTask&, const SubTask&) = default;
};

enum class Phrasing { pick_up, put };

inline std::string describe(const ObjectRef& r) {
  std::string s;
  if (r.kind == ObjectKind::block && r.size) {
    s += to_string(*r.size);
    s += ' ';
  }
  s += to_string(r.color);
  s += ' ';
  s += to_string(r.kind);
  return s;
}

inline std::string describe_target(const SubTaskTarget& t) {
  switch (t.kind) {
    case TargetKind::object: {
      const ObjectRef& o = t.object.value();
      return (o.kind == ObjectKind::block ? "on the " : "in the ") + describe(o);
    }
    case TargetKind::area: return "in the " + std::string(to_string(t.area.value())) + " area";
    case TargetKind::table: return "on the table";
    case TargetKind::relative: {
      const std::string ref = "the " + describe(t.object.value());
      switch (t.direction.value()) {
        case Direction::left: return "to the left of " + ref;
        case Direction::right: return "to the right of " + ref;
        case Direction::above: return "above " + ref;
        case Direction::below: return "below " + ref;
      }
    }
  }
  return "";
}

/// "Pick up the small red block and place it on the big blue block."
inline std::string render_text(const SubTask& st, Phrasing phrasing = Phrasing::pick_up) {
  const std::string where = describe_target(st.target);
  if (phrasing == Phrasing::put) return "Put the " + describe(st.source) + " " + where + ".";
  return "Pick up the " + describe(st.source) + " and place it " + where + ".";
}

inline SubTask make_subtask(ObjectRef source, SubTaskTarget target) {
  SubTask st;
  st.source = std::move(source);
  st.target = std::move(target);
  st.text = render_text(st);
  return st;
}

/// Structural equality of what the two sub-tasks ask for; wording is ignored.
inline bool same_intent(const SubTask& a, const SubTask& b) {
  if (a.verb != b.verb || a.source.id != b.source.id || a.target.kind != b.target.kind) return false;
  switch (a.target.kind) {
    case TargetKind::object: return a.target.object->id == b.target.object->id;
    case TargetKind::area: return a.target.area == b.target.area;
    case TargetKind::table: return true;
    case TargetKind::relative:
      return a.target.object->id == b.target.object->id && a.target.direction == b.target.direction;
  }
  return false;
}

/// True when `predicted` asks for the same thing as some member of `valid`.
inline bool subtask_equivalent(const SubTask& predicted, const std::vector<SubTask>& valid) {
  for (const auto& v : valid) {
    if (same_intent(predicted, v)) return true;
  }
  return false;
}

struct SubTaskResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline ObjectRef resolve_ref(const ObjectRef& r, const SceneState& s) {
  if (r.id) {
    if (!s.has(*r.id)) throw SubTaskResolutionError("sub-task names unknown object id " + std::to_string(*r.id));
    return ObjectRef::of(s.at(*r.id));
  }
  std::optional<int> hit;
  for (const auto& o : s.objects) {
    if (o.kind != r.kind || o.color != r.color) continue;
    if (r.size && o.kind == ObjectKind::block && o.size != *r.size) continue;
    if (hit) throw SubTaskResolutionError("ambiguous selector: " + describe(r));
    hit = o.id;
  }
  if (!hit) throw SubTaskResolutionError("selector matches nothing: " + describe(r));
  return ObjectRef::of(s.at(*hit));
}

}  // namespace detail

/// Fills in ids (and canonical attributes) of every selector against a scene and re-renders
/// the text. Throws SubTaskResolutionError when a selector is ambiguous or dangling.
inline SubTask resolve(const SubTask& st, const SceneState& s) {
  SubTask out = st;
  out.source = detail::resolve_ref(st.source, s);
  if (out.source.kind != ObjectKind::block) throw SubTaskResolutionError("sub-task source must be a block");
  switch (st.target.kind) {
    case TargetKind::object:
    case TargetKind::relative:
      if (!st.target.object) throw SubTaskResolutionError("target is missing its object");
      out.target.object = detail::resolve_ref(*st.target.object, s);
      if (st.target.kind == TargetKind::relative && !st.target.direction) {
        throw SubTaskResolutionError("relative target is missing its direction");
      }
      break;
    case TargetKind::area:
      if (!st.target.area) throw SubTaskResolutionError("area target is missing its area");
      break;
    case TargetKind::table: break;
  }
  out.text = render_text(out);
  return out;
}

}  // namespace tabletop
