#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tabletop/control.hpp"
#include "tabletop/image_io.hpp"
#include "tabletop/parallel.hpp"
#include "tabletop/serialize.hpp"
#include "tabletop/tasks.hpp"
#include "tabletop/tokenizer.hpp"

namespace tabletop {

inline constexpr int kDatasetSchemaVersion = 1;

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  int t = 0;
  std::string color_png;  // relative to the episode directory
  std::string depth_png;
  SubTask subtask;
  Action action;
  Tokens tokens{};
  double reward = 0.0;
};

struct EpisodeRecord {
  std::string task_id;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string split;
  std::string goal_text;
  SceneState initial_scene;
  GoalCondition goal;
  std::vector<StepRecord> steps;
  double final_satisfied_fraction = 0.0;
};

struct GenerateConfig {
  std::vector<std::string> task_ids;
  std::size_t episodes = 20;
  std::uint64_t master_seed = 0;
  WorkspaceConfig world;
  std::size_t workers = 1;
  int max_attempts = 10;
  /// Test hook: may tamper with a freshly built record before verification.
  std::function<void(EpisodeRecord&, int attempt)> tamper;
};

inline json record_to_json(const EpisodeRecord& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"t", s.t},
                     {"color_png", s.color_png},
                     {"depth_png", s.depth_png},
                     {"subtask", to_json(s.subtask)},
                     {"action_continuous",
                      {s.action.pick.x, s.action.pick.y, s.action.pick.yaw, s.action.place.x, s.action.place.y,
                       s.action.place.yaw}},
                     {"action_tokens", s.tokens},
                     {"reward", s.reward}});
  }
  return {{"schema_version", kDatasetSchemaVersion},
          {"task_id", r.task_id},
          {"index", r.index},
          {"seed", r.seed},
          {"split", r.split},
          {"goal_text", r.goal_text},
          {"initial_scene", to_json(r.initial_scene)},
          {"goal", to_json(r.goal)},
          {"steps", steps},
          {"final_satisfied_fraction", r.final_satisfied_fraction}};
}

inline EpisodeRecord record_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kDatasetSchemaVersion) throw DatasetError("unsupported record schema");
  EpisodeRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.index = j.at("index").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.split = j.at("split").get<std::string>();
  r.goal_text = j.at("goal_text").get<std::string>();
  r.initial_scene = scene_from_json(j.at("initial_scene"));
  r.goal = goal_from_json(j.at("goal"));
  for (const auto& sj : j.at("steps")) {
    StepRecord s;
    s.t = sj.at("t").get<int>();
    s.color_png = sj.at("color_png").get<std::string>();
    s.depth_png = sj.at("depth_png").get<std::string>();
    s.subtask = subtask_from_json(sj.at("subtask"));
    const auto a = sj.at("action_continuous").get<std::vector<double>>();
    if (a.size() != 6) throw DatasetError("action_continuous must have 6 entries");
    s.action = {{a[0], a[1], a[2]}, {a[3], a[4], a[5]}};
    s.tokens = sj.at("action_tokens").get<Tokens>();
    s.reward = sj.at("reward").get<double>();
    r.steps.push_back(std::move(s));
  }
  r.final_satisfied_fraction = j.at("final_satisfied_fraction").get<double>();
  return r;
}

/// Empty when the record replays cleanly: with p = 0 the recorded actions reproduce the
/// recorded rewards exactly and end with every scored sub-goal satisfied, and every token
/// decodes to within the codec bound of its continuous action.
inline std::string verify_replay(const EpisodeRecord& r, const WorkspaceConfig& world) {
  WorkspaceConfig quiet = world;
  quiet.drop_probability = 0.0;
  const ActionCodec codec;
  Rng unused(0);
  SceneState s = r.initial_scene;
  for (const auto& st : r.steps) {
    const Action d = codec.decode(st.tokens);
    const std::array<double, 6> want = {st.action.pick.x, st.action.pick.y, st.action.pick.yaw,
                                        st.action.place.x, st.action.place.y, st.action.place.yaw};
    const std::array<double, 6> got = {d.pick.x, d.pick.y, d.pick.yaw, d.place.x, d.place.y, d.place.yaw};
    for (std::size_t k = 0; k < 6; ++k) {
      if (std::abs(want[k] - got[k]) > codec.max_error(k) + 1e-12) {
        return "step " + std::to_string(st.t) + ": tokens disagree with the continuous action";
      }
    }
    auto res = step(s, st.action, r.goal, quiet, unused);
    if (res.outcome.reward != st.reward) return "step " + std::to_string(st.t) + ": reward does not replay";
    s = std::move(res.state);
  }
  const double f = r.goal.satisfied_fraction(s);
  if (f != 1.0 || r.final_satisfied_fraction != f) return "replay does not finish the goal";
  return {};
}

namespace detail {

inline Action wrapped(Action a) {
  a.pick.yaw = wrap_angle(a.pick.yaw);
  a.place.yaw = wrap_angle(a.place.yaw);
  return a;
}

/// Oracle demonstration with noiseless rasters kept in memory.
struct BuiltEpisode {
  EpisodeRecord record;
  std::vector<Bytes> color, depth;
};

inline BuiltEpisode build_episode(const std::string& task_id, std::size_t index, std::uint64_t seed,
                                  const WorkspaceConfig& world) {
  WorkspaceConfig quiet = world;
  quiet.drop_probability = 0.0;
  BuiltEpisode b;
  const TaskInstance inst = episode_task(task_id, seed, quiet);
  EpisodeRecord& r = b.record;
  r.task_id = task_id;
  r.index = index;
  r.seed = seed;
  r.split = std::string(to_string(find_task(task_id)->split));
  r.goal_text = inst.goal_text;
  r.initial_scene = inst.scene;
  r.goal = inst.goal;
  OraclePolicy oracle(derive_seed(seed, "policy"));
  const ActionCodec codec;
  Rng unused(0);
  SceneState s = inst.scene;
  const int cap = static_cast<int>(decomposition_step_cap(s, inst.goal));
  for (int t = 0; !inst.goal.done(s); ++t) {
    if (t >= cap) throw ReplanImpossible("demonstration exceeded its step cap");
    Observation obs = render(s, quiet, unused, false);
    b.color.push_back(encode_color_png(obs.color));
    b.depth.push_back(encode_depth_png(obs.depth));
    obs.symbolic = SymbolicSnapshot{s, inst.goal};
    StepRecord st;
    st.t = t;
    st.color_png = "step_" + std::to_string(t) + "_color.png";
    st.depth_png = "step_" + std::to_string(t) + "_depth.png";
    st.subtask = oracle.plan(obs, inst.goal_text);
    st.action = wrapped(oracle.act(obs, inst.goal_text, st.subtask));
    st.tokens = codec.encode(st.action);
    auto res = step(s, st.action, inst.goal, quiet, unused);
    st.reward = res.outcome.reward;
    s = std::move(res.state);
    r.steps.push_back(std::move(st));
  }
  r.final_satisfied_fraction = inst.goal.satisfied_fraction(s);
  return b;
}

inline std::string episode_dir(const std::string& task_id, std::size_t index) {
  return task_id + "/episode_" + std::to_string(index);
}

}  // namespace detail

struct EpisodeEntry {
  std::string task_id;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string split;
  std::string path;  // relative to the dataset root
  std::map<std::string, std::string> sha256;  // file name -> digest
  std::size_t subtasks = 0;
  int rejected = 0;
};

inline json generation_config_json(const GenerateConfig& cfg) {
  return {{"task_ids", cfg.task_ids},
          {"episodes", cfg.episodes},
          {"master_seed", cfg.master_seed},
          {"max_attempts", cfg.max_attempts},
          {"world",
           {{"bounds", {cfg.world.bounds.x0, cfg.world.bounds.y0, cfg.world.bounds.x1, cfg.world.bounds.y1}},
            {"raster", {cfg.world.raster_width, cfg.world.raster_height}},
            {"pixels_per_meter", cfg.world.pixels_per_meter},
            {"transport_substeps", cfg.world.transport_substeps}}}};
}

/// Writes replay-verified oracle episodes under out_dir/<task>/episode_<i>/ plus
/// out_dir/manifest.json, and returns the manifest. A record that fails replay is rejected
/// and rebuilt from a fresh derived seed.
inline json generate_dataset(const GenerateConfig& cfg, const std::filesystem::path& out_dir,
                             const std::function<void(const std::string&)>& log = {}) {
  namespace fs = std::filesystem;
  for (const auto& id : cfg.task_ids) {
    if (!find_task(id)) throw UnknownTask(id);
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ImageIoError("cannot create " + out_dir.string() + ": " + ec.message());

  const std::size_t n = cfg.task_ids.size() * cfg.episodes;
  std::vector<EpisodeEntry> entries(n);
  parallel_for(n, cfg.workers, [&](std::size_t job) {
    const std::string& task = cfg.task_ids[job / cfg.episodes];
    const std::size_t index = job % cfg.episodes;
    const std::uint64_t base_seed = episode_seed(cfg.master_seed, task, index);
    EpisodeEntry& e = entries[job];
    e.task_id = task;
    e.index = index;
    e.split = std::string(to_string(find_task(task)->split));
    e.path = detail::episode_dir(task, index);
    for (int attempt = 0;; ++attempt) {
      if (attempt >= cfg.max_attempts) {
        throw DatasetError(e.path + ": no episode passed replay verification in " + std::to_string(attempt) +
                           " attempts");
      }
      const std::uint64_t seed = attempt == 0 ? base_seed : derive_seed(base_seed, static_cast<std::uint64_t>(attempt));
      detail::BuiltEpisode b;
      try {
        b = detail::build_episode(task, index, seed, cfg.world);
      } catch (const ReplanImpossible&) {
        ++e.rejected;
        continue;
      }
      if (cfg.tamper) cfg.tamper(b.record, attempt);
      const std::string text = record_to_json(b.record).dump(1);
      const std::string problem = verify_replay(record_from_json(json::parse(text)), cfg.world);
      if (!problem.empty()) {
        ++e.rejected;
        if (log) log(e.path + ": rejected (" + problem + ")");
        continue;
      }
      const fs::path dir = out_dir / e.path;
      fs::remove_all(dir, ec);
      fs::create_directories(dir, ec);
      if (ec) throw ImageIoError("cannot create " + dir.string() + ": " + ec.message());
      for (std::size_t t = 0; t < b.record.steps.size(); ++t) {
        const auto& st = b.record.steps[t];
        write_file((dir / st.color_png).string(), b.color[t]);
        write_file((dir / st.depth_png).string(), b.depth[t]);
        e.sha256[st.color_png] = sha256_hex(b.color[t]);
        e.sha256[st.depth_png] = sha256_hex(b.depth[t]);
      }
      write_file((dir / "record.json").string(), text);
      e.sha256["record.json"] = sha256_hex(text);
      e.seed = seed;
      e.subtasks = b.record.steps.size();
      return;
    }
  });

  json episodes = json::array();
  json per_task = json::object();
  std::size_t total_subtasks = 0;
  int rejected = 0;
  for (const auto& e : entries) {
    episodes.push_back({{"task_id", e.task_id},
                        {"index", e.index},
                        {"seed", e.seed},
                        {"split", e.split},
                        {"path", e.path},
                        {"subtasks", e.subtasks},
                        {"sha256", e.sha256}});
    auto& t = per_task[e.task_id];
    if (t.is_null()) t = {{"split", e.split}, {"episodes", 0}, {"subtasks", 0}};
    t["episodes"] = t["episodes"].get<std::size_t>() + 1;
    t["subtasks"] = t["subtasks"].get<std::size_t>() + e.subtasks;
    total_subtasks += e.subtasks;
    rejected += e.rejected;
  }
  const json config = generation_config_json(cfg);
  json manifest{{"schema_version", kDatasetSchemaVersion},
                {"config", config},
                {"config_hash", sha256_hex(config.dump())},
                {"codec", ActionCodec{}.metadata()},
                {"observations", "noiseless"},
                {"tasks", per_task},
                {"total_subtasks", total_subtasks},
                {"rejected", rejected},
                {"episodes", episodes}};
  write_file((out_dir / "manifest.json").string(), manifest.dump(1));
  if (log && rejected > 0) log(std::to_string(rejected) + " episode(s) rejected and regenerated");
  return manifest;
}

/// Read side of a generated dataset. Episodes are read on demand and checked against the
/// manifest digests.
class Dataset {
 public:
  explicit Dataset(std::filesystem::path root) : root_(std::move(root)) {
    const std::string text = [&] {
      try {
        const Bytes b = read_file((root_ / "manifest.json").string());
        return std::string(b.begin(), b.end());
      } catch (const ImageIoError& e) {
        throw DatasetError(std::string("cannot read manifest: ") + e.what());
      }
    }();
    manifest_ = json::parse(text, nullptr, false);
    if (manifest_.is_discarded()) throw DatasetError("manifest is not valid JSON");
    if (manifest_.value("schema_version", -1) != kDatasetSchemaVersion) {
      throw DatasetError("unsupported dataset schema_version " + manifest_.value("schema_version", json(nullptr)).dump());
    }
    for (const auto& ej : manifest_.at("episodes")) {
      EpisodeEntry e;
      e.task_id = ej.at("task_id").get<std::string>();
      e.index = ej.at("index").get<std::size_t>();
      e.seed = ej.at("seed").get<std::uint64_t>();
      e.split = ej.at("split").get<std::string>();
      e.path = ej.at("path").get<std::string>();
      e.subtasks = ej.at("subtasks").get<std::size_t>();
      e.sha256 = ej.at("sha256").get<std::map<std::string, std::string>>();
      entries_.push_back(std::move(e));
    }
  }

  const json& manifest() const { return manifest_; }
  const std::vector<EpisodeEntry>& entries() const { return entries_; }

  std::vector<std::size_t> select(std::optional<std::string> split, std::optional<std::string> task = {}) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (split && entries_[i].split != *split) continue;
      if (task && entries_[i].task_id != *task) continue;
      out.push_back(i);
    }
    return out;
  }

  /// Verifies every file of entry `i` and parses its record. Throws DatasetError naming the
  /// episode on any mismatch.
  EpisodeRecord load(std::size_t i) const {
    const EpisodeEntry& e = entries_.at(i);
    std::string record_text;
    for (const auto& [name, digest] : e.sha256) {
      Bytes data;
      try {
        data = read_file((root_ / e.path / name).string());
      } catch (const ImageIoError&) {
        throw DatasetError(e.path + ": missing file " + name);
      }
      if (sha256_hex(data) != digest) throw DatasetError(e.path + ": checksum mismatch in " + name);
      if (name == "record.json") record_text.assign(data.begin(), data.end());
    }
    try {
      return record_from_json(json::parse(record_text));
    } catch (const std::exception& ex) {
      throw DatasetError(e.path + ": bad record: " + ex.what());
    }
  }

  ColorImage color(std::size_t i, const StepRecord& s) const {
    return decode_color_png(read_file((root_ / entries_.at(i).path / s.color_png).string()));
  }
  DepthImage depth(std::size_t i, const StepRecord& s) const {
    return decode_depth_png(read_file((root_ / entries_.at(i).path / s.depth_png).string()));
  }

  /// Calls fn(entry index, record) for each loadable episode in `indices`; episodes that
  /// fail verification go to on_error and iteration continues.
  void for_each(const std::vector<std::size_t>& indices, const std::function<void(std::size_t, const EpisodeRecord&)>& fn,
                const std::function<void(std::size_t, const DatasetError&)>& on_error = {}) const {
    for (std::size_t i : indices) {
      std::optional<EpisodeRecord> r;
      try {
        r = load(i);
      } catch (const DatasetError& err) {
        if (on_error) on_error(i, err);
        continue;
      }
      fn(i, *r);
    }
  }

 private:
  std::filesystem::path root_;
  json manifest_;
  std::vector<EpisodeEntry> entries_;
};

}  // namespace tabletop
