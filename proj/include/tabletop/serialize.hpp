#pragma once

#include <string>

#include "json.hpp"
#include "tabletop/goal.hpp"
#include "tabletop/render.hpp"
#include "tabletop/scene.hpp"
#include "tabletop/subtask.hpp"
#include "tabletop/world.hpp"

// JSON forms of the domain types. Enums travel as their lowercase names.

namespace tabletop {

using json = nlohmann::json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline json to_json(const Pose& p) { return json::array({p.x, p.y, p.yaw}); }

inline Pose pose_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("pose must be [x, y, yaw]");
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError("pose entries must be numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json to_json(const Action& a) { return {{"pick", to_json(a.pick)}, {"place", to_json(a.place)}}; }

inline Action action_from_json(const json& j) {
  if (!j.is_object() || !j.contains("pick") || !j.contains("place")) throw ParseError("action needs pick and place");
  return {pose_from_json(j["pick"]), pose_from_json(j["place"])};
}

inline json to_json(const ObjectInstance& o) {
  json j{{"id", o.id}, {"kind", to_string(o.kind)}, {"color", to_string(o.color)}, {"pose", to_json(o.pose)}};
  if (o.kind == ObjectKind::block) j["size"] = to_string(o.size);
  j["supported_by"] = o.supported_by ? json(*o.supported_by) : json(nullptr);
  return j;
}

inline ObjectInstance object_from_json(const json& j) {
  ObjectInstance o;
  try {
    o.id = detail::field<int>(j, "id");
    o.kind = kind_from_string(detail::field<std::string>(j, "kind"));
    o.color = color_from_string(detail::field<std::string>(j, "color"));
    if (o.kind == ObjectKind::block) o.size = size_from_string(detail::field<std::string>(j, "size"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  o.pose = pose_from_json(j.at("pose"));
  if (j.contains("supported_by") && !j["supported_by"].is_null()) o.supported_by = j["supported_by"].get<int>();
  return o;
}

inline json to_json(const SceneState& s) {
  json objs = json::array();
  for (const auto& o : s.objects) objs.push_back(to_json(o));
  return {{"time", s.time}, {"credited_fraction", s.credited_fraction}, {"objects", objs}};
}

inline SceneState scene_from_json(const json& j) {
  SceneState s;
  s.time = detail::field<int>(j, "time");
  s.credited_fraction = detail::field<double>(j, "credited_fraction");
  for (const auto& o : j.at("objects")) s.objects.push_back(object_from_json(o));
  return s;
}

inline json to_json(const Predicate& p) {
  return std::visit(
      [](const auto& v) -> json {
        using P = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<P, InRegions>) {
          return {{"type", "in_regions"}, {"regions", v.regions}, {"preferred", v.preferred}};
        } else if constexpr (std::is_same_v<P, InArea>) {
          return {{"type", "in_area"}, {"area", to_string(v.area)}};
        } else if constexpr (std::is_same_v<P, OnBlock>) {
          return {{"type", "on_block"}, {"base", v.base}};
        } else if constexpr (std::is_same_v<P, AtOffset>) {
          return {{"type", "at_offset"},
                  {"reference", v.reference},
                  {"direction", to_string(v.direction)},
                  {"distance", v.distance}};
        } else {
          return {{"type", "on_table"}};
        }
      },
      p);
}

inline Predicate predicate_from_json(const json& j) {
  const auto type = detail::field<std::string>(j, "type");
  try {
    if (type == "in_regions") {
      return InRegions{detail::field<std::vector<int>>(j, "regions"), detail::field<int>(j, "preferred")};
    }
    if (type == "in_area") return InArea{area_from_string(detail::field<std::string>(j, "area"))};
    if (type == "on_block") return OnBlock{detail::field<int>(j, "base")};
    if (type == "at_offset") {
      return AtOffset{detail::field<int>(j, "reference"),
                      direction_from_string(detail::field<std::string>(j, "direction")),
                      detail::field<double>(j, "distance")};
    }
    if (type == "on_table") return OnTable{};
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  throw ParseError("unknown predicate type '" + type + "'");
}

inline json to_json(const GoalCondition& g) {
  json subs = json::array();
  for (const auto& sg : g.sub_goals) {
    subs.push_back({{"object", sg.object},
                    {"predicate", to_json(sg.predicate)},
                    {"depends_on", sg.depends_on ? json(*sg.depends_on) : json(nullptr)},
                    {"scored", sg.scored},
                    {"mode", to_string(sg.mode())}});
  }
  return {{"sub_goals", subs},
          {"tolerance",
           {{"position", g.tolerance.position}, {"yaw", g.tolerance.yaw}, {"zone_threshold", g.tolerance.zone_threshold}}},
          {"bounds", {g.bounds.x0, g.bounds.y0, g.bounds.x1, g.bounds.y1}}};
}

inline GoalCondition goal_from_json(const json& j) {
  GoalCondition g;
  for (const auto& sj : j.at("sub_goals")) {
    SubGoal sg;
    sg.object = detail::field<int>(sj, "object");
    sg.predicate = predicate_from_json(sj.at("predicate"));
    if (!sj.at("depends_on").is_null()) sg.depends_on = sj["depends_on"].get<std::size_t>();
    sg.scored = detail::field<bool>(sj, "scored");
    g.sub_goals.push_back(std::move(sg));
  }
  const auto& t = j.at("tolerance");
  g.tolerance = {t.at("position").get<double>(), t.at("yaw").get<double>(), t.at("zone_threshold").get<double>()};
  const auto b = j.at("bounds").get<std::vector<double>>();
  if (b.size() != 4) throw ParseError("bounds must have 4 entries");
  g.bounds = {b[0], b[1], b[2], b[3]};
  return g;
}

inline json to_json(const ObjectRef& r) {
  json j{{"kind", to_string(r.kind)}, {"color", to_string(r.color)}};
  if (r.id) j["id"] = *r.id;
  if (r.size) j["size"] = to_string(*r.size);
  return j;
}

inline ObjectRef ref_from_json(const json& j) {
  ObjectRef r;
  try {
    r.kind = kind_from_string(detail::field<std::string>(j, "kind"));
    r.color = color_from_string(detail::field<std::string>(j, "color"));
    if (j.contains("size") && !j["size"].is_null()) r.size = size_from_string(j["size"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
  if (j.contains("id") && !j["id"].is_null()) {
    if (!j["id"].is_number_integer()) throw ParseError("object id must be an integer");
    r.id = j["id"].get<int>();
  }
  return r;
}

inline json to_json(const SubTaskTarget& t) {
  json j{{"kind", to_string(t.kind)}};
  if (t.object) j["object"] = to_json(*t.object);
  if (t.area) j["area"] = to_string(*t.area);
  if (t.direction) j["direction"] = to_string(*t.direction);
  return j;
}

inline SubTaskTarget target_from_json(const json& j) {
  SubTaskTarget t;
  try {
    t.kind = target_kind_from_string(detail::field<std::string>(j, "kind"));
    if (j.contains("object") && !j["object"].is_null()) t.object = ref_from_json(j["object"]);
    if (j.contains("area") && !j["area"].is_null()) t.area = area_from_string(j["area"].get<std::string>());
    if (j.contains("direction") && !j["direction"].is_null()) {
      t.direction = direction_from_string(j["direction"].get<std::string>());
    }
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
  return t;
}

inline json to_json(const SubTask& st) {
  return {{"verb", st.verb}, {"source", to_json(st.source)}, {"target", to_json(st.target)}, {"text", st.text}};
}

/// Parses a structured sub-task. Missing text is rendered from the structure.
inline SubTask subtask_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("sub-task must be an object");
  SubTask st;
  st.verb = j.contains("verb") ? j["verb"].get<std::string>() : "pick_place";
  if (st.verb != "pick_place") throw ParseError("unsupported verb '" + st.verb + "'");
  if (!j.contains("source") || !j.contains("target")) throw ParseError("sub-task needs source and target");
  st.source = ref_from_json(j["source"]);
  st.target = target_from_json(j["target"]);
  if ((st.target.kind == TargetKind::object || st.target.kind == TargetKind::relative) && !st.target.object) {
    throw ParseError("target is missing its object");
  }
  if (st.target.kind == TargetKind::area && !st.target.area) throw ParseError("area target is missing its area");
  if (st.target.kind == TargetKind::relative && !st.target.direction) {
    throw ParseError("relative target is missing its direction");
  }
  st.text = j.contains("text") && j["text"].is_string() ? j["text"].get<std::string>() : render_text(st);
  return st;
}

inline json to_json(const StepOutcome& o) {
  return {{"reward", o.reward}, {"done", o.done}, {"drop_event", o.drop_event}, {"executed", o.executed}};
}

inline json to_json(const SymbolicSnapshot& s) { return {{"scene", to_json(s.scene)}, {"goal", to_json(s.goal)}}; }

inline SymbolicSnapshot symbolic_from_json(const json& j) {
  return {scene_from_json(j.at("scene")), goal_from_json(j.at("goal"))};
}

}  // namespace tabletop
