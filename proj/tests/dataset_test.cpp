#include <gtest/gtest.h>

#include <filesystem>
#include <unistd.h>

#include "tabletop/dataset.hpp"

using namespace tabletop;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("tabletop_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

GenerateConfig small_config() {
  GenerateConfig cfg;
  cfg.task_ids = {"put-block-into-matching-bowl", "stack-blocks-of-same-color",
                  "put-hidden-blocks-in-two-layer-towers-into-matching-bowls", "pick-and-place-primitive"};
  cfg.episodes = 3;
  cfg.master_seed = 11;
  return cfg;
}

std::map<std::string, std::string> tree_digests(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = sha256_hex(read_file(e.path().string()));
  }
  return out;
}

}  // namespace

TEST(Dataset, RegenerationIsByteIdenticalAcrossWorkerCounts) {
  TempDir a("gen_a"), b("gen_b");
  GenerateConfig cfg = small_config();
  cfg.workers = 1;
  generate_dataset(cfg, a.path);
  cfg.workers = 4;
  generate_dataset(cfg, b.path);
  const auto da = tree_digests(a.path);
  EXPECT_EQ(da, tree_digests(b.path));
  // 4 tasks x 3 episodes, each with record.json and two images per step, plus the manifest.
  std::size_t expected_files = 1;
  const Dataset ds(a.path);
  for (const auto& e : ds.entries()) expected_files += 1 + 2 * e.subtasks;
  EXPECT_EQ(da.size(), expected_files);
}

TEST(Dataset, ManifestDescribesTheDataset) {
  TempDir dir("manifest");
  const GenerateConfig cfg = small_config();
  const json m = generate_dataset(cfg, dir.path);
  EXPECT_EQ(m["schema_version"], kDatasetSchemaVersion);
  EXPECT_EQ(m["config_hash"], sha256_hex(m["config"].dump()));
  EXPECT_EQ(m["codec"], ActionCodec{}.metadata());
  EXPECT_EQ(m["observations"], "noiseless");
  EXPECT_EQ(m["episodes"].size(), 12u);
  std::size_t total = 0;
  for (const auto& e : m["episodes"]) total += e["subtasks"].get<std::size_t>();
  EXPECT_EQ(m["total_subtasks"], total);
  EXPECT_EQ(m["tasks"]["put-block-into-matching-bowl"]["split"], "seen");
  EXPECT_EQ(m["tasks"]["put-hidden-blocks-in-two-layer-towers-into-matching-bowls"]["split"], "additional");
  EXPECT_TRUE(fs::exists(dir.path / "manifest.json"));

  GenerateConfig other = cfg;
  other.master_seed = 12;
  EXPECT_NE(sha256_hex(generation_config_json(other).dump()), m["config_hash"]);
}

TEST(Dataset, RecordsReplayAndImagesMatchTheReplayedState) {
  TempDir dir("load");
  generate_dataset(small_config(), dir.path);
  const Dataset ds(dir.path);
  const ActionCodec codec;
  std::size_t loaded = 0;
  ds.for_each(ds.select(std::nullopt), [&](std::size_t i, const EpisodeRecord& r) {
    ++loaded;
    EXPECT_EQ(verify_replay(r, WorkspaceConfig{}), "");
    EXPECT_EQ(r.final_satisfied_fraction, 1.0);
    double total = 0.0;
    SceneState s = r.initial_scene;
    Rng unused(0);
    for (const auto& st : r.steps) {
      EXPECT_GT(st.reward, 0.0);
      total += st.reward;
      const Action d = codec.decode(st.tokens);
      EXPECT_LE(std::abs(d.place.x - st.action.place.x), codec.max_error(3) + 1e-12);
      EXPECT_EQ(resolve(st.subtask, s), st.subtask);
      Rng render_rng(0);
      const Observation obs = render(s, WorkspaceConfig{}, render_rng, false);
      if (st.t == 0 || st.t + 1 == static_cast<int>(r.steps.size())) {
        EXPECT_EQ(ds.color(i, st), obs.color);
        const DepthImage depth = ds.depth(i, st);
        for (std::size_t p = 0; p < depth.meters.size(); p += 97) {
          EXPECT_NEAR(depth.meters[p], obs.depth.meters[p], 0.0005 + 1e-6);
        }
      }
      s = step(s, st.action, r.goal, WorkspaceConfig{}, unused).state;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  });
  EXPECT_EQ(loaded, 12u);
}

TEST(Dataset, CorruptFilesAreFlaggedAndSkipped) {
  TempDir dir("corrupt");
  generate_dataset(small_config(), dir.path);
  const Dataset ds(dir.path);
  const auto& victim = ds.entries()[4];
  const fs::path png = dir.path / victim.path / "step_0_color.png";
  Bytes data = read_file(png.string());
  data[data.size() / 2] ^= 0x5a;
  write_file(png.string(), data);
  try {
    ds.load(4);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find(victim.path), std::string::npos);
  }
  std::vector<std::size_t> bad;
  std::size_t good = 0;
  ds.for_each(ds.select(std::nullopt), [&](std::size_t, const EpisodeRecord&) { ++good; },
              [&](std::size_t i, const DatasetError&) { bad.push_back(i); });
  EXPECT_EQ(bad, std::vector<std::size_t>{4});
  EXPECT_EQ(good, 11u);

  fs::remove(dir.path / ds.entries()[7].path / "record.json");
  EXPECT_THROW(ds.load(7), DatasetError);
  write_file((dir.path / "manifest.json").string(), std::string_view("{not json"));
  EXPECT_THROW(Dataset{dir.path}, DatasetError);
}

TEST(Dataset, SplitAndTaskFilters) {
  TempDir dir("split");
  GenerateConfig cfg;
  cfg.task_ids = {"put-block-into-matching-bowl", "put-block-into-mismatching-bowl", "stack-blocks-of-same-size",
                  "stack-all-blocks-on-a-zone"};
  cfg.episodes = 2;
  generate_dataset(cfg, dir.path);
  const Dataset ds(dir.path);
  const auto unseen = ds.select(std::string("unseen"));
  ASSERT_EQ(unseen.size(), 4u);
  for (std::size_t i : unseen) {
    const auto* info = find_task(ds.entries()[i].task_id);
    EXPECT_GE(info->letter, "F");
    EXPECT_LE(info->letter, "K");
  }
  EXPECT_EQ(ds.select(std::string("seen")).size(), 2u);
  EXPECT_EQ(ds.select(std::string("additional")).size(), 2u);
  EXPECT_EQ(ds.select(std::nullopt, std::string("stack-blocks-of-same-size")).size(), 2u);
  EXPECT_TRUE(ds.select(std::string("seen"), std::string("stack-blocks-of-same-size")).empty());
}

TEST(Dataset, TamperedRecordsAreRejectedAndRegenerated) {
  TempDir dir("tamper");
  GenerateConfig cfg;
  cfg.task_ids = {"stack-blocks-of-same-color"};
  cfg.episodes = 2;
  cfg.tamper = [](EpisodeRecord& r, int attempt) {
    if (attempt == 0 && r.index == 1) r.steps.back().reward += 0.01;
  };
  std::vector<std::string> log;
  const json m = generate_dataset(cfg, dir.path, [&](const std::string& s) { log.push_back(s); });
  EXPECT_EQ(m["rejected"], 1);
  const std::uint64_t base = episode_seed(0, "stack-blocks-of-same-color", 1);
  EXPECT_EQ(m["episodes"][1]["seed"], derive_seed(base, 1));
  EXPECT_EQ(m["episodes"][0]["seed"], episode_seed(0, "stack-blocks-of-same-color", 0));
  ASSERT_FALSE(log.empty());
  EXPECT_NE(log[0].find("reward does not replay"), std::string::npos);

  cfg.tamper = [](EpisodeRecord& r, int) { r.steps.front().tokens[0] = (r.steps.front().tokens[0] + 3) % 1024; };
  TempDir dir2("tamper2");
  EXPECT_THROW(generate_dataset(cfg, dir2.path), DatasetError);

  cfg.tamper = nullptr;
  cfg.task_ids = {"no-such-task"};
  EXPECT_THROW(generate_dataset(cfg, dir2.path), UnknownTask);
}
