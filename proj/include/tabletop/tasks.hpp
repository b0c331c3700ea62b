#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tabletop/goal.hpp"
#include "tabletop/oracle.hpp"
#include "tabletop/rng.hpp"
#include "tabletop/scene.hpp"

namespace tabletop {

enum class Split : std::uint8_t { seen, unseen, additional };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::seen: return "seen";
    case Split::unseen: return "unseen";
    case Split::additional: return "additional";
  }
  return "?";
}

struct TaskInfo {
  std::string_view id;
  /// Letter used in the seen/unseen benchmark listing, empty for tasks outside it.
  std::string_view letter;
  Split split;
  bool long_horizon;
  std::string_view instruction_template;
  std::vector<MatchMode> match_modes;
  std::string_view sampler;
};

// clang-format off
inline const std::vector<TaskInfo>& task_catalog() {
  using M = MatchMode;
  static const std::vector<TaskInfo> catalog = {
      {"pick-and-place-primitive", "A", Split::seen, false,
       "Put the [OBJ] on the [OBJ].", {M::pose, M::zone},
       "3-4 blocks of distinct colors, 0-2 bowls, 0-2 zones; one block onto another object"},
      {"pick-and-place-primitive-with-size", "", Split::seen, false,
       "Put the [SIZE] [OBJ] on the [SIZE] [OBJ].", {M::pose},
       "3-5 blocks with distinct (size, color); one block onto another block"},
      {"pick-and-place-primitive-with-absolute-position", "", Split::seen, false,
       "Put the [OBJ] on the [ABS_POS].", {M::zone},
       "3-4 blocks of distinct colors; one block into a quadrant it is not in"},
      {"put-block-into-matching-bowl", "B", Split::seen, true,
       "Put the blocks in the bowls with matching colors.", {M::zone},
       "N in 2-4 bowls of distinct colors, N matching blocks, distractor blocks up to 4-8 blocks total"},
      {"stack-smaller-over-bigger-with-same-color", "C", Split::seen, true,
       "Stack smaller blocks over bigger blocks of the same color.", {M::pose},
       "2-3 colors, 1-2 big and 1-2 small blocks per color, at most 8 blocks"},
      {"stack-block-in-absolute-area", "D", Split::seen, true,
       "Stack all the blocks in the [ABS_POS] area.", {M::zone, M::pose},
       "4-6 blocks outside the target quadrant"},
      {"put-even-blocks-in-same-color-zone", "E", Split::seen, true,
       "Move all blocks of a color that occur in even numbers.", {M::zone},
       "2-3 colors with 1-4 blocks each (4-8 total, at least one even and one odd count), one zone per color"},
      {"put-block-into-mismatching-bowl", "F", Split::unseen, true,
       "Put the blocks in the bowls with mismatching colors.", {M::zone},
       "3-4 bowls of distinct colors, N in [bowls, min(8, 2*bowls)] blocks of bowl colors"},
      {"stack-blocks-of-same-size", "G", Split::unseen, true,
       "Stack blocks of the same size.", {M::pose},
       "2-4 big and 2-4 small blocks"},
      {"stack-blocks-with-alternate-color", "H", Split::unseen, true,
       "Stack blocks in alternate colors.", {M::pose},
       "4-6 blocks of one size in exactly two colors, base color drawn first"},
      {"stack-smaller-over-bigger-with-same-color-in-same-color-zone", "I", Split::unseen, true,
       "Stack blocks of the same color in the zone with same color, with the bigger blocks underneath.",
       {M::zone, M::pose},
       "2-3 colors, 1-2 big and 1-2 small blocks per color, one zone per color"},
      {"move-blocks-between-absolute-positions", "J", Split::unseen, true,
       "Move all the blocks in the [ABS_POS] area to the [ABS_POS] area.", {M::zone},
       "2-4 blocks in the source quadrant, 2-4 elsewhere outside both quadrants"},
      {"stack-blocks-of-same-color", "K", Split::unseen, true,
       "Stack blocks of the same color.", {M::pose},
       "2-3 colors, 2-3 blocks per color, at most 8 blocks"},
      {"put-block-into-mismatching-zone", "", Split::additional, true,
       "Put the blocks in the zones with mismatching colors.", {M::zone},
       "3-4 zones of distinct colors, N in [zones, min(8, 2*zones)] blocks of zone colors"},
      {"put-hidden-blocks-in-two-layer-towers-into-matching-bowls", "", Split::additional, true,
       "Put all the hidden blocks in the two-layer stacked towers into the bowls with matching colors.", {M::zone},
       "2-3 two-block towers with distinct bottom colors, one bowl per bottom color, 0-2 loose blocks"},
      {"put-hidden-blocks-in-two-layer-towers-into-mismatching-bowls", "", Split::additional, true,
       "Put all the hidden blocks in the two-layer stacked towers into the bowls with mismatching colors.", {M::zone},
       "2-3 two-block towers with distinct bottom colors, one bowl per bottom color, 0-2 loose blocks"},
      {"put-hidden-blocks-in-three-layer-towers-into-matching-bowls", "", Split::additional, true,
       "Put all the hidden blocks in the three-layer stacked towers into the bowls with matching colors.", {M::zone},
       "1-2 three-block towers with distinct hidden colors, one bowl per hidden color, 0-2 loose blocks"},
      {"put-hidden-blocks-in-pyramid-into-matching-bowls", "", Split::additional, true,
       "Put all the hidden blocks on the first layer of the pyramid into the bowls with matching colors.", {M::zone},
       "pyramid of 3+2+1 blocks, one bowl per hidden first-layer color, 0-2 loose blocks"},
      {"stack-bigger-over-smaller-with-same-color-in-same-color-zone", "", Split::additional, true,
       "Stack blocks of the same color in the zone with same color, with the smaller blocks underneath.",
       {M::zone, M::pose},
       "2-3 colors, 1-2 big and 1-2 small blocks per color, one zone per color"},
      {"stack-all-blocks-on-a-zone", "", Split::additional, true,
       "Stack all the blocks on the [COLOR] zone.", {M::zone, M::pose},
       "1-3 zones of distinct colors, 4-6 blocks"},
      {"stack-blocks-by-relative-position", "", Split::additional, true,
       "Stack all the blocks on the [REL_POS] of the [COLOR] block on the [COLOR] zone.", {M::pose},
       "reference block on a zone, 1-2 zones, 3-5 other blocks, tower base 0.1 m from the reference"},
      {"move-blocks-between-absolute-positions-by-size", "", Split::additional, true,
       "Move all the [SIZE] blocks in the [ABS_POS] area to the [ABS_POS] area.", {M::zone},
       "2-3 blocks of the named size and 1-2 of the other size in the source quadrant, 1-3 elsewhere"},
      {"move-blocks-between-absolute-positions-by-color", "", Split::additional, true,
       "Move all the [COLOR] blocks in the [ABS_POS] area to the [ABS_POS] area.", {M::zone},
       "2-3 blocks of the named color and 1-2 of other colors in the source quadrant, 1-3 elsewhere"},
  };
  return catalog;
}
// clang-format on

inline const TaskInfo* find_task(std::string_view id) {
  for (const auto& t : task_catalog()) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

inline std::vector<std::string> all_task_ids() {
  std::vector<std::string> out;
  for (const auto& t : task_catalog()) out.emplace_back(t.id);
  return out;
}

inline std::vector<std::string> long_horizon_task_ids() {
  std::vector<std::string> out;
  for (const auto& t : task_catalog()) {
    if (t.long_horizon) out.emplace_back(t.id);
  }
  return out;
}

struct UnknownTask : std::invalid_argument {
  explicit UnknownTask(std::string_view id) : std::invalid_argument("unknown task id '" + std::string(id) + "'") {}
};

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A sampled episode start: scene, instruction, and goal predicates.
struct TaskInstance {
  std::string task_id;
  SceneState scene;
  std::string goal_text;
  GoalCondition goal;
};

namespace sampling {

inline std::vector<Color> distinct_colors(Rng& rng, std::size_t n) {
  std::vector<Color> all(kAllColors.begin(), kAllColors.end());
  shuffle(all, rng);
  all.resize(n);
  return all;
}

inline double random_yaw(Rng& rng) { return uniform(rng, -kPi, kPi); }

/// Rejection-sampling scene builder; no two free-standing objects overlap.
class SceneBuilder {
 public:
  SceneBuilder(Rng& rng, const Rect& bounds) : rng_(rng), bounds_(bounds) {}

  int block(Color c, BlockSize size, std::optional<Rect> within = std::nullopt, std::vector<Rect> avoid = {}) {
    ObjectInstance o;
    o.kind = ObjectKind::block;
    o.color = c;
    o.size = size;
    return place(o, within, avoid);
  }

  int region(ObjectKind kind, Color c, std::vector<Rect> avoid = {}, std::optional<Rect> within = std::nullopt) {
    ObjectInstance o;
    o.kind = kind;
    o.color = c;
    return place(o, within, avoid);
  }

  /// Block centered on top of `base`.
  int stacked(Color c, BlockSize size, int base) {
    ObjectInstance o;
    o.kind = ObjectKind::block;
    o.color = c;
    o.size = size;
    const auto& b = scene_.at(base);
    o.pose = {b.pose.x, b.pose.y, b.pose.yaw};
    o.supported_by = base;
    return scene_.add(o);
  }

  /// Block at an explicit pose resting on whatever is there.
  int at(Color c, BlockSize size, Pose p) {
    ObjectInstance o;
    o.kind = ObjectKind::block;
    o.color = c;
    o.size = size;
    o.pose = p;
    o.supported_by = scene_.topmost_at(p.x, p.y);
    return scene_.add(o);
  }

  /// True when a footprint at (x, y) with half extent h is clear of everything.
  bool free(double x, double y, double h, double margin = 0.01) const {
    const Rect fp = Rect::centered(x, y, h, h);
    if (!bounds_.contains(fp)) return false;
    for (const auto& o : scene_.objects) {
      if (overlaps(o.footprint().inflated(margin), fp)) return false;
    }
    return true;
  }

  SceneState& scene() { return scene_; }
  Rng& rng() { return rng_; }
  const Rect& bounds() const { return bounds_; }

 private:
  int place(ObjectInstance o, std::optional<Rect> within, const std::vector<Rect>& avoid) {
    const double h = o.half_extent();
    const Rect box = within.value_or(bounds_);
    const double margin = 0.01;
    for (int attempt = 0; attempt < 2000; ++attempt) {
      const double x = uniform(rng_, box.x0 + h + margin, box.x1 - h - margin);
      const double y = uniform(rng_, box.y0 + h + margin, box.y1 - h - margin);
      const Rect fp = o.footprint_at(x, y);
      if (!free(x, y, h, margin)) continue;
      if (std::any_of(avoid.begin(), avoid.end(), [&](const Rect& r) { return overlaps(r, fp); })) continue;
      o.pose = {x, y, o.kind == ObjectKind::block ? random_yaw(rng_) : 0.0};
      return scene_.add(o);
    }
    throw SamplerError("rejection sampling budget exhausted placing a " + describe(o));
  }

  Rng& rng_;
  Rect bounds_;
  SceneState scene_;
};

inline BlockSize random_size(Rng& rng) { return bernoulli(rng, 0.5) ? BlockSize::big : BlockSize::small; }

/// Appends a tower: level 0 gets `base` (scored) or an unscored OnTable anchor, every
/// further level rests on the previous one.
inline void add_tower(GoalCondition& g, const std::vector<int>& order, std::optional<Predicate> base,
                      std::optional<std::size_t> base_depends_on = std::nullopt) {
  const std::size_t first = g.sub_goals.size();
  g.sub_goals.push_back({order.front(), base.value_or(Predicate{OnTable{}}), base_depends_on, base.has_value()});
  for (std::size_t i = 1; i < order.size(); ++i) {
    g.sub_goals.push_back({order[i], OnBlock{order[i - 1]}, first + i - 1, true});
  }
}

/// Bigs first (shuffled), then smalls (shuffled), or the reverse.
inline std::vector<int> size_ordered(const SceneState& s, std::vector<int> ids, Rng& rng, bool bigs_first) {
  std::vector<int> big, small;
  for (int id : ids) (s.at(id).size == BlockSize::big ? big : small).push_back(id);
  shuffle(big, rng);
  shuffle(small, rng);
  auto& lower = bigs_first ? big : small;
  auto& upper = bigs_first ? small : big;
  lower.insert(lower.end(), upper.begin(), upper.end());
  return lower;
}

/// Random derangement-style assignment of block colors onto region colors, no fixed color matches.
inline std::vector<int> mismatching_targets(const SceneState& s, const std::vector<int>& blocks,
                                            const std::vector<int>& regions, Rng& rng) {
  const int capacity = 4;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::map<int, int> load;
    std::vector<int> out;
    bool ok = true;
    for (int b : blocks) {
      std::vector<int> options;
      for (int r : regions) {
        if (s.at(r).color != s.at(b).color && load[r] < capacity) options.push_back(r);
      }
      if (options.empty()) {
        ok = false;
        break;
      }
      const int r = options[uniform_index(rng, options.size())];
      ++load[r];
      out.push_back(r);
    }
    if (ok) return out;
  }
  throw SamplerError("no mismatching assignment exists");
}

inline std::string fill(std::string text, std::string_view slot, std::string_view value) {
  const auto pos = text.find(slot);
  if (pos == std::string::npos) throw std::logic_error("template slot missing: " + std::string(slot));
  text.replace(pos, slot.size(), value);
  return text;
}

inline std::string rel_pos_text(Direction d) {
  switch (d) {
    case Direction::left: return "left";
    case Direction::right: return "right";
    case Direction::above: return "top side";
    case Direction::below: return "bottom side";
  }
  return "";
}

inline std::string object_phrase(const ObjectInstance& o, bool with_size) {
  std::string s;
  if (with_size && o.kind == ObjectKind::block) {
    s += to_string(o.size);
    s += ' ';
  }
  s += to_string(o.color);
  s += ' ';
  s += to_string(o.kind);
  return s;
}

/// Block counts per color, drawn until the total lands in [lo, hi].
inline std::vector<int> counts_in_range(Rng& rng, std::size_t colors, int per_lo, int per_hi, int lo, int hi) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<int> c(colors);
    int total = 0;
    for (auto& v : c) total += (v = uniform_int(rng, per_lo, per_hi));
    if (total >= lo && total <= hi) return c;
  }
  throw SamplerError("cannot draw per-color counts");
}

using Instance = std::pair<std::string, GoalCondition>;  // goal text, goal

// --- Primitives -----------------------------------------------------------------------------

inline Instance primitive(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const int nblocks = uniform_int(rng, 3, 4);
  const int nbowls = uniform_int(rng, 0, 2);
  const int nzones = uniform_int(rng, 0, 2);
  const auto bowl_colors = distinct_colors(rng, static_cast<std::size_t>(nbowls));
  const auto zone_colors = distinct_colors(rng, static_cast<std::size_t>(nzones));
  std::vector<int> targets;
  for (Color c : bowl_colors) targets.push_back(b.region(ObjectKind::bowl, c));
  for (Color c : zone_colors) targets.push_back(b.region(ObjectKind::zone, c));
  std::vector<int> blocks;
  for (Color c : distinct_colors(rng, static_cast<std::size_t>(nblocks))) blocks.push_back(b.block(c, random_size(rng)));
  const int src = blocks[0];
  targets.insert(targets.end(), blocks.begin() + 1, blocks.end());
  const int dst = targets[uniform_index(rng, targets.size())];
  const auto& s = b.scene();
  GoalCondition g;
  if (s.at(dst).kind == ObjectKind::block) {
    g.sub_goals.push_back({src, OnBlock{dst}, std::nullopt, true});
  } else {
    g.sub_goals.push_back({src, InRegions{{dst}, dst}, std::nullopt, true});
  }
  std::string text = fill(std::string(info.instruction_template), "[OBJ]", object_phrase(s.at(src), false));
  text = fill(text, "[OBJ]", object_phrase(s.at(dst), false));
  return {text, g};
}

inline Instance primitive_with_size(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const int n = uniform_int(rng, 3, 5);
  std::vector<std::pair<Color, BlockSize>> kinds;
  for (Color c : distinct_colors(rng, 3)) {
    kinds.emplace_back(c, BlockSize::big);
    kinds.emplace_back(c, BlockSize::small);
  }
  shuffle(kinds, rng);
  std::vector<int> blocks;
  for (int i = 0; i < n; ++i) blocks.push_back(b.block(kinds[i].first, kinds[i].second));
  const int src = blocks[0];
  const int dst = blocks[1 + uniform_index(rng, blocks.size() - 1)];
  const auto& s = b.scene();
  GoalCondition g;
  g.sub_goals.push_back({src, OnBlock{dst}, std::nullopt, true});
  std::string text = std::string(info.instruction_template);
  text = fill(text, "[SIZE]", to_string(s.at(src).size));
  text = fill(text, "[OBJ]", object_phrase(s.at(src), false));
  text = fill(text, "[SIZE]", to_string(s.at(dst).size));
  text = fill(text, "[OBJ]", object_phrase(s.at(dst), false));
  return {text, g};
}

inline Instance primitive_with_absolute_position(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const AreaName area = kAllAreas[uniform_index(rng, 4)];
  const Rect rect = area_rect(area, b.bounds());
  const int n = uniform_int(rng, 3, 4);
  std::vector<int> blocks;
  const auto colors = distinct_colors(rng, static_cast<std::size_t>(n));
  // The moved block starts outside the target quadrant; distractors may be anywhere.
  blocks.push_back(b.block(colors[0], random_size(rng), std::nullopt, {rect}));
  for (int i = 1; i < n; ++i) blocks.push_back(b.block(colors[static_cast<std::size_t>(i)], random_size(rng)));
  GoalCondition g;
  g.sub_goals.push_back({blocks[0], InArea{area}, std::nullopt, true});
  std::string text = fill(std::string(info.instruction_template), "[OBJ]", object_phrase(b.scene().at(blocks[0]), false));
  text = fill(text, "[ABS_POS]", std::string(to_string(area)) + " area");
  return {text, g};
}

// --- Bowls and zones ------------------------------------------------------------------------

inline Instance matching_bowls(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const int n = uniform_int(rng, 2, 4);
  const auto colors = distinct_colors(rng, static_cast<std::size_t>(n) + 4);
  std::vector<int> bowls;
  for (int i = 0; i < n; ++i) bowls.push_back(b.region(ObjectKind::bowl, colors[static_cast<std::size_t>(i)]));
  GoalCondition g;
  for (int i = 0; i < n; ++i) {
    const int blk = b.block(colors[static_cast<std::size_t>(i)], random_size(rng));
    g.sub_goals.push_back({blk, InRegions{{bowls[static_cast<std::size_t>(i)]}, bowls[static_cast<std::size_t>(i)]},
                           std::nullopt, true});
  }
  const int distractors = uniform_int(rng, std::max(0, 4 - n), 8 - n);
  for (int i = 0; i < distractors; ++i) {
    b.block(colors[static_cast<std::size_t>(n) + uniform_index(rng, 4)], random_size(rng));
  }
  return {std::string(info.instruction_template), g};
}

inline Instance mismatching_regions(SceneBuilder& b, const TaskInfo& info, ObjectKind kind) {
  Rng& rng = b.rng();
  const int k = uniform_int(rng, 3, 4);
  const auto colors = distinct_colors(rng, static_cast<std::size_t>(k));
  std::vector<int> regions;
  for (Color c : colors) regions.push_back(b.region(kind, c));
  const int n = uniform_int(rng, k, std::min(8, 2 * k));
  std::vector<int> blocks;
  for (int i = 0; i < n; ++i) {
    const Color c = i < k ? colors[static_cast<std::size_t>(i)] : colors[uniform_index(rng, colors.size())];
    blocks.push_back(b.block(c, random_size(rng)));
  }
  const auto targets = mismatching_targets(b.scene(), blocks, regions, rng);
  GoalCondition g;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::vector<int> allowed;
    for (int r : regions) {
      if (b.scene().at(r).color != b.scene().at(blocks[i]).color) allowed.push_back(r);
    }
    g.sub_goals.push_back({blocks[i], InRegions{allowed, targets[i]}, std::nullopt, true});
  }
  return {std::string(info.instruction_template), g};
}

inline Instance even_blocks_in_zone(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  std::vector<int> counts;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 1000) throw SamplerError("cannot draw even/odd color counts");
    counts = counts_in_range(rng, static_cast<std::size_t>(uniform_int(rng, 2, 3)), 1, 4, 4, 8);
    const bool any_even = std::any_of(counts.begin(), counts.end(), [](int c) { return c % 2 == 0; });
    const bool any_odd = std::any_of(counts.begin(), counts.end(), [](int c) { return c % 2 == 1; });
    if (any_even && any_odd) break;
  }
  const auto colors = distinct_colors(rng, counts.size());
  std::vector<int> zones;
  for (Color c : colors) zones.push_back(b.region(ObjectKind::zone, c));
  GoalCondition g;
  for (std::size_t ci = 0; ci < counts.size(); ++ci) {
    for (int k = 0; k < counts[ci]; ++k) {
      const int blk = b.block(colors[ci], random_size(rng));
      if (counts[ci] % 2 == 0) g.sub_goals.push_back({blk, InRegions{{zones[ci]}, zones[ci]}, std::nullopt, true});
    }
  }
  return {std::string(info.instruction_template), g};
}

// --- Stacking -------------------------------------------------------------------------------

/// Per-color towers, optionally based in the zone of the same color.
inline Instance same_color_towers(SceneBuilder& b, const TaskInfo& info, bool bigs_first, bool in_zone) {
  Rng& rng = b.rng();
  const std::size_t ncolors = static_cast<std::size_t>(uniform_int(rng, 2, 3));
  const auto colors = distinct_colors(rng, ncolors);
  std::vector<std::pair<int, int>> counts(ncolors);  // (big, small)
  for (int attempt = 0;; ++attempt) {
    if (attempt > 1000) throw SamplerError("cannot draw size counts");
    int total = 0;
    for (auto& [nb, ns] : counts) {
      nb = uniform_int(rng, 1, 2);
      ns = uniform_int(rng, 1, 2);
      total += nb + ns;
    }
    if (total <= 8) break;
  }
  std::vector<int> zones;
  if (in_zone) {
    for (Color c : colors) zones.push_back(b.region(ObjectKind::zone, c));
  }
  GoalCondition g;
  for (std::size_t ci = 0; ci < ncolors; ++ci) {
    std::vector<int> ids;
    for (int k = 0; k < counts[ci].first; ++k) ids.push_back(b.block(colors[ci], BlockSize::big, std::nullopt, {}));
    for (int k = 0; k < counts[ci].second; ++k) ids.push_back(b.block(colors[ci], BlockSize::small));
    const auto order = size_ordered(b.scene(), ids, rng, bigs_first);
    std::optional<Predicate> base;
    if (in_zone) base = InRegions{{zones[ci]}, zones[ci]};
    add_tower(g, order, base);
  }
  return {std::string(info.instruction_template), g};
}

inline Instance same_size_towers(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const int nb = uniform_int(rng, 2, 4);
  const int ns = uniform_int(rng, 2, 4);
  std::vector<int> big, small;
  for (int i = 0; i < nb; ++i) big.push_back(b.block(kAllColors[uniform_index(rng, kColorCount)], BlockSize::big));
  for (int i = 0; i < ns; ++i) small.push_back(b.block(kAllColors[uniform_index(rng, kColorCount)], BlockSize::small));
  shuffle(big, rng);
  shuffle(small, rng);
  GoalCondition g;
  add_tower(g, big, std::nullopt);
  add_tower(g, small, std::nullopt);
  return {std::string(info.instruction_template), g};
}

inline Instance alternate_color_tower(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const int n = uniform_int(rng, 4, 6);
  const auto colors = distinct_colors(rng, 2);  // colors[0] is the base color
  const BlockSize size = random_size(rng);
  std::vector<int> first, second;
  for (int i = 0; i < n; ++i) {
    (i % 2 == 0 ? first : second).push_back(b.block(colors[static_cast<std::size_t>(i % 2)], size));
  }
  shuffle(first, rng);
  shuffle(second, rng);
  std::vector<int> order;
  for (int i = 0; i < n; ++i) order.push_back(i % 2 == 0 ? first[static_cast<std::size_t>(i / 2)] : second[static_cast<std::size_t>(i / 2)]);
  GoalCondition g;
  add_tower(g, order, std::nullopt);
  return {std::string(info.instruction_template), g};
}

inline Instance tower_in_area(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const AreaName area = kAllAreas[uniform_index(rng, 4)];
  const Rect rect = area_rect(area, b.bounds());
  const int n = uniform_int(rng, 4, 6);
  std::vector<int> ids;
  for (int i = 0; i < n; ++i) {
    ids.push_back(b.block(kAllColors[uniform_index(rng, kColorCount)], random_size(rng), std::nullopt, {rect}));
  }
  GoalCondition g;
  add_tower(g, size_ordered(b.scene(), ids, rng, true), InArea{area});
  return {fill(std::string(info.instruction_template), "[ABS_POS]", to_string(area)), g};
}

inline Instance tower_on_zone(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const auto colors = distinct_colors(rng, static_cast<std::size_t>(uniform_int(rng, 1, 3)));
  std::vector<int> zones;
  for (Color c : colors) zones.push_back(b.region(ObjectKind::zone, c));
  const int target = zones[uniform_index(rng, zones.size())];
  const int n = uniform_int(rng, 4, 6);
  std::vector<int> ids;
  for (int i = 0; i < n; ++i) ids.push_back(b.block(kAllColors[uniform_index(rng, kColorCount)], random_size(rng)));
  GoalCondition g;
  add_tower(g, size_ordered(b.scene(), ids, rng, true), InRegions{{target}, target});
  return {fill(std::string(info.instruction_template), "[COLOR]", to_string(b.scene().at(target).color)), g};
}

inline Instance tower_by_relative_position(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const auto colors = distinct_colors(rng, 4);
  const Direction dir = kAllDirections[uniform_index(rng, kAllDirections.size())];
  const auto [dx, dy] = direction_vector(dir);
  // Keep the zone far enough from the edge that the tower spot stays on the table.
  Rect box = b.bounds();
  if (dx < 0) box.x0 += kRelativeOffset;
  if (dx > 0) box.x1 -= kRelativeOffset;
  if (dy < 0) box.y0 += kRelativeOffset;
  if (dy > 0) box.y1 -= kRelativeOffset;
  const int zone = b.region(ObjectKind::zone, colors[1], {}, box);
  const Pose zp = b.scene().at(zone).pose;
  const Rect spot = Rect::centered(zp.x + dx * kRelativeOffset, zp.y + dy * kRelativeOffset, 0.04, 0.04);
  if (bernoulli(rng, 0.5)) b.region(ObjectKind::zone, colors[2], {spot});
  const int ref = b.at(colors[0], BlockSize::big, {zp.x, zp.y, sampling::random_yaw(rng)});

  const int n = uniform_int(rng, 3, 5);
  std::vector<int> ids;
  for (int i = 0; i < n; ++i) {
    // Any color but the reference's, so the reference block stays unique.
    const Color c = kAllColors[(static_cast<std::size_t>(colors[0]) + 1 + uniform_index(rng, kColorCount - 1)) % kColorCount];
    ids.push_back(b.block(c, random_size(rng), std::nullopt, {spot}));
  }
  GoalCondition g;
  g.sub_goals.push_back({ref, InRegions{{zone}, zone}, std::nullopt, false});
  add_tower(g, size_ordered(b.scene(), ids, rng, true), AtOffset{ref, dir, kRelativeOffset}, 0);
  std::string text = fill(std::string(info.instruction_template), "[REL_POS]", rel_pos_text(dir));
  text = fill(text, "[COLOR]", to_string(colors[0]));
  text = fill(text, "[COLOR]", to_string(colors[1]));
  return {text, g};
}

/// Blocks resting on hidden ones must end up off every block; uncovering is a completed
/// pick-and-place step and is scored like one.
inline void add_clearing(GoalCondition& g, const std::vector<int>& blockers) {
  for (int id : blockers) g.sub_goals.push_back({id, OnTable{}, std::nullopt, true});
}

// --- Hidden blocks --------------------------------------------------------------------------

/// Towers of `layers` blocks; every block but the top one of each tower is hidden.
inline Instance hidden_in_towers(SceneBuilder& b, const TaskInfo& info, int layers, bool matching) {
  Rng& rng = b.rng();
  const int towers = layers == 2 ? uniform_int(rng, 2, 3) : uniform_int(rng, 1, 2);
  const std::size_t hidden_per = static_cast<std::size_t>(layers - 1);
  const auto colors = distinct_colors(rng, towers * hidden_per);
  std::vector<int> bowls;
  for (Color c : colors) bowls.push_back(b.region(ObjectKind::bowl, c));
  std::vector<int> hidden, blockers;
  for (int t = 0; t < towers; ++t) {
    int below = b.block(colors[t * hidden_per], BlockSize::big);
    hidden.push_back(below);
    for (std::size_t k = 1; k < hidden_per; ++k) {
      below = b.stacked(colors[t * hidden_per + k], BlockSize::big, below);
      hidden.push_back(below);
    }
    blockers.push_back(b.stacked(kAllColors[uniform_index(rng, kColorCount)], random_size(rng), below));
  }
  const int loose = uniform_int(rng, 0, 2);
  for (int i = 0; i < loose; ++i) b.block(kAllColors[uniform_index(rng, kColorCount)], random_size(rng));
  GoalCondition g;
  const auto& s = b.scene();
  const std::vector<int> targets =
      matching ? std::vector<int>{} : mismatching_targets(s, hidden, bowls, rng);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    std::vector<int> allowed;
    for (int bw : bowls) {
      if ((s.at(bw).color == s.at(hidden[i]).color) == matching) allowed.push_back(bw);
    }
    const int preferred = matching ? allowed.front() : targets[i];
    g.sub_goals.push_back({hidden[i], InRegions{allowed, preferred}, std::nullopt, true});
  }
  add_clearing(g, blockers);
  return {std::string(info.instruction_template), g};
}

/// Pyramid of three big blocks in a row, two blocks on the first two, one on top of those.
inline Instance hidden_in_pyramid(SceneBuilder& b, const TaskInfo& info) {
  Rng& rng = b.rng();
  const auto colors = distinct_colors(rng, 2);
  std::vector<int> bowls;
  for (Color c : colors) bowls.push_back(b.region(ObjectKind::bowl, c));
  const double e = kBigBlockEdge;
  std::optional<Pose> origin;
  for (int attempt = 0; attempt < 2000 && !origin; ++attempt) {
    const double x = uniform(rng, b.bounds().x0 + 0.04, b.bounds().x1 - 0.04 - 2 * e);
    const double y = uniform(rng, b.bounds().y0 + 0.04, b.bounds().y1 - 0.04);
    if (b.free(x, y, 0.5 * e) && b.free(x + e, y, 0.5 * e) && b.free(x + 2 * e, y, 0.5 * e) &&
        b.free(x + e, y, 1.5 * e)) {
      origin = Pose{x, y, 0.0};
    }
  }
  if (!origin) throw SamplerError("no room for the pyramid");
  const int b0 = b.at(colors[0], BlockSize::big, {origin->x, origin->y, 0.0});
  const int b1 = b.at(colors[1], BlockSize::big, {origin->x + e, origin->y, 0.0});
  b.at(kAllColors[uniform_index(rng, kColorCount)], BlockSize::big, {origin->x + 2 * e, origin->y, 0.0});
  const int s0 = b.stacked(kAllColors[uniform_index(rng, kColorCount)], BlockSize::big, b0);
  const int s1 = b.stacked(kAllColors[uniform_index(rng, kColorCount)], BlockSize::big, b1);
  const int top = b.stacked(kAllColors[uniform_index(rng, kColorCount)], BlockSize::small, s0);
  const int loose = uniform_int(rng, 0, 2);
  for (int i = 0; i < loose; ++i) b.block(kAllColors[uniform_index(rng, kColorCount)], random_size(rng));
  GoalCondition g;
  g.sub_goals.push_back({b0, InRegions{{bowls[0]}, bowls[0]}, std::nullopt, true});
  g.sub_goals.push_back({b1, InRegions{{bowls[1]}, bowls[1]}, std::nullopt, true});
  add_clearing(g, {s0, s1, top});
  return {std::string(info.instruction_template), g};
}

// --- Moving between quadrants ---------------------------------------------------------------

enum class MoveFilter { all, by_size, by_color };

inline Instance move_between_areas(SceneBuilder& b, const TaskInfo& info, MoveFilter filter) {
  Rng& rng = b.rng();
  std::vector<AreaName> areas(kAllAreas.begin(), kAllAreas.end());
  shuffle(areas, rng);
  const AreaName from = areas[0];
  const AreaName to = areas[1];
  const Rect src = area_rect(from, b.bounds());
  const Rect dst = area_rect(to, b.bounds());
  const auto palette_colors = distinct_colors(rng, 5);
  const BlockSize chosen_size = random_size(rng);
  const BlockSize other_size = chosen_size == BlockSize::big ? BlockSize::small : BlockSize::big;
  const Color chosen_color = palette_colors[0];
  auto other_color = [&] { return palette_colors[1 + uniform_index(rng, 4)]; };

  GoalCondition g;
  std::vector<int> movers;
  if (filter == MoveFilter::all) {
    const int n = uniform_int(rng, 2, 4);
    for (int i = 0; i < n; ++i) movers.push_back(b.block(kAllColors[uniform_index(rng, kColorCount)], random_size(rng), src));
  } else {
    const int n = uniform_int(rng, 2, 3);
    const int stay = uniform_int(rng, 1, 2);
    for (int i = 0; i < n; ++i) {
      movers.push_back(filter == MoveFilter::by_size ? b.block(other_color(), chosen_size, src)
                                                     : b.block(chosen_color, random_size(rng), src));
    }
    for (int i = 0; i < stay; ++i) {
      if (filter == MoveFilter::by_size) b.block(other_color(), other_size, src);
      else b.block(other_color(), random_size(rng), src);
    }
  }
  const int others = filter == MoveFilter::all ? uniform_int(rng, 2, 4) : uniform_int(rng, 1, 3);
  for (int i = 0; i < others; ++i) b.block(kAllColors[uniform_index(rng, kColorCount)], random_size(rng), std::nullopt, {src, dst});
  for (int m : movers) g.sub_goals.push_back({m, InArea{to}, std::nullopt, true});

  std::string text = std::string(info.instruction_template);
  if (filter == MoveFilter::by_size) text = fill(text, "[SIZE]", to_string(chosen_size));
  if (filter == MoveFilter::by_color) text = fill(text, "[COLOR]", to_string(chosen_color));
  text = fill(text, "[ABS_POS]", to_string(from));
  text = fill(text, "[ABS_POS]", to_string(to));
  return {text, g};
}

inline Instance dispatch(SceneBuilder& b, const TaskInfo& info) {
  const std::string_view id = info.id;
  if (id == "pick-and-place-primitive") return primitive(b, info);
  if (id == "pick-and-place-primitive-with-size") return primitive_with_size(b, info);
  if (id == "pick-and-place-primitive-with-absolute-position") return primitive_with_absolute_position(b, info);
  if (id == "put-block-into-matching-bowl") return matching_bowls(b, info);
  if (id == "stack-smaller-over-bigger-with-same-color") return same_color_towers(b, info, true, false);
  if (id == "stack-block-in-absolute-area") return tower_in_area(b, info);
  if (id == "put-even-blocks-in-same-color-zone") return even_blocks_in_zone(b, info);
  if (id == "put-block-into-mismatching-bowl") return mismatching_regions(b, info, ObjectKind::bowl);
  if (id == "stack-blocks-of-same-size") return same_size_towers(b, info);
  if (id == "stack-blocks-with-alternate-color") return alternate_color_tower(b, info);
  if (id == "stack-smaller-over-bigger-with-same-color-in-same-color-zone") return same_color_towers(b, info, true, true);
  if (id == "move-blocks-between-absolute-positions") return move_between_areas(b, info, MoveFilter::all);
  if (id == "stack-blocks-of-same-color") {
    // Same-color towers without the size split: 2-3 blocks per color, bigs below smalls.
    Rng& rng = b.rng();
    const auto colors = distinct_colors(rng, static_cast<std::size_t>(uniform_int(rng, 2, 3)));
    const auto counts = counts_in_range(rng, colors.size(), 2, 3, 4, 8);
    GoalCondition g;
    for (std::size_t ci = 0; ci < colors.size(); ++ci) {
      std::vector<int> ids;
      for (int k = 0; k < counts[ci]; ++k) ids.push_back(b.block(colors[ci], random_size(rng)));
      add_tower(g, size_ordered(b.scene(), ids, rng, true), std::nullopt);
    }
    return {std::string(info.instruction_template), g};
  }
  if (id == "put-block-into-mismatching-zone") return mismatching_regions(b, info, ObjectKind::zone);
  if (id == "put-hidden-blocks-in-two-layer-towers-into-matching-bowls") return hidden_in_towers(b, info, 2, true);
  if (id == "put-hidden-blocks-in-two-layer-towers-into-mismatching-bowls") return hidden_in_towers(b, info, 2, false);
  if (id == "put-hidden-blocks-in-three-layer-towers-into-matching-bowls") return hidden_in_towers(b, info, 3, true);
  if (id == "put-hidden-blocks-in-pyramid-into-matching-bowls") return hidden_in_pyramid(b, info);
  if (id == "stack-bigger-over-smaller-with-same-color-in-same-color-zone") return same_color_towers(b, info, false, true);
  if (id == "stack-all-blocks-on-a-zone") return tower_on_zone(b, info);
  if (id == "stack-blocks-by-relative-position") return tower_by_relative_position(b, info);
  if (id == "move-blocks-between-absolute-positions-by-size") return move_between_areas(b, info, MoveFilter::by_size);
  if (id == "move-blocks-between-absolute-positions-by-color") return move_between_areas(b, info, MoveFilter::by_color);
  throw UnknownTask(id);
}

}  // namespace sampling

/// Samples a solvable initial scene for `task_id`. Retries (within a fixed budget) when a draw
/// is overcrowded or the oracle cannot finish it.
inline TaskInstance sample_scene(std::string_view task_id, Rng& rng, const WorkspaceConfig& cfg = {}) {
  const TaskInfo* info = find_task(task_id);
  if (!info) throw UnknownTask(task_id);
  std::string last_error;
  for (int attempt = 0; attempt < 50; ++attempt) {
    try {
      sampling::SceneBuilder b(rng, cfg.bounds);
      auto [text, goal] = sampling::dispatch(b, *info);
      goal.bounds = cfg.bounds;
      TaskInstance inst{std::string(info->id), std::move(b.scene()), std::move(text), std::move(goal)};
      validate_scene(inst.scene, cfg);
      if (inst.goal.satisfied_count(inst.scene) > 0) {
        last_error = "initial scene already satisfies part of the goal";
        continue;
      }
      Rng probe(derive_seed(rng(), "solvability"));
      (void)oracle_decompose(inst.scene, inst.goal, cfg, probe);
      return inst;
    } catch (const SamplerError& e) {
      last_error = e.what();
    } catch (const ReplanImpossible& e) {
      last_error = e.what();
    }
  }
  throw SamplerError("sampler budget exhausted for " + std::string(task_id) + ": " + last_error);
}

}  // namespace tabletop
