#include <gtest/gtest.h>

#include <chrono>

#include "tabletop/control.hpp"
#include "tabletop/external_policy.hpp"

using namespace tabletop;
using namespace std::chrono_literals;

namespace {

std::string echo(const std::string& args = "") { return std::string(ECHO_POLICY_PATH) + " " + args; }

ExternalPolicyConfig config(const std::string& command, std::uint64_t seed = 1,
                            std::chrono::milliseconds timeout = 10000ms) {
  ExternalPolicyConfig cfg;
  cfg.command = command;
  cfg.seed = seed;
  cfg.timeout = timeout;
  cfg.send_rasters = false;
  return cfg;
}

// Reference for what crosses the wire: the oracle's action passed through the codec.
class QuantizedOracle : public Policy {
 public:
  explicit QuantizedOracle(std::uint64_t seed) : oracle_(seed) {}
  SubTask plan(const Observation& obs, std::string_view goal) override { return oracle_.plan(obs, goal); }
  Action act(const Observation& obs, std::string_view goal, const SubTask& st) override {
    Action a = oracle_.act(obs, goal, st);
    a.pick.yaw = wrap_angle(a.pick.yaw);
    a.place.yaw = wrap_angle(a.place.yaw);
    return codec_.decode(codec_.encode(a));
  }

 private:
  OraclePolicy oracle_;
  ActionCodec codec_;
};

Observation first_observation(const TaskInstance& inst) {
  Observation obs;
  obs.symbolic = SymbolicSnapshot{inst.scene, inst.goal};
  return obs;
}

TaskInstance task(std::string_view id, std::uint64_t seed) {
  Rng rng(seed);
  return sample_scene(id, rng);
}

PolicyError::Kind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const PolicyError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a PolicyError";
  return PolicyError::Kind::missing_symbolic;
}

}  // namespace

TEST(External, EchoClientMatchesTheInProcessOracleStepForStep) {
  const std::vector<std::string> ids = {"put-block-into-matching-bowl", "stack-blocks-of-same-color",
                                        "put-hidden-blocks-in-three-layer-towers-into-matching-bowls",
                                        "stack-blocks-by-relative-position", "move-blocks-between-absolute-positions"};
  for (const auto& id : ids) {
    const std::uint64_t seed = episode_seed(3, id, 0);
    const TaskInstance inst = episode_task(id, seed, WorkspaceConfig{});
    WorkspaceConfig world;
    world.drop_probability = 0.1;
    const int budget = default_step_budget(inst, world, seed);

    ExternalPolicy remote(config(echo(), 99));
    SimEnvironment env_remote(inst, world, seed);
    const auto a = run_episode(remote, env_remote, Strategy::c(2), budget);

    QuantizedOracle local(99);
    SimEnvironment env_local(inst, world, seed);
    const auto b = run_episode(local, env_local, Strategy::c(2), budget);

    ASSERT_EQ(a.transcript.size(), b.transcript.size()) << id;
    for (std::size_t t = 0; t < a.transcript.size(); ++t) {
      EXPECT_EQ(a.transcript[t].subtask, b.transcript[t].subtask) << id << " t=" << t;
      EXPECT_EQ(a.transcript[t].action, b.transcript[t].action) << id << " t=" << t;
      EXPECT_EQ(a.transcript[t].outcome, b.transcript[t].outcome) << id << " t=" << t;
    }
    EXPECT_EQ(a.final_state, b.final_state);
    EXPECT_EQ(a.score, b.score);
    EXPECT_EQ(a.process_failures, 0);
  }
}

TEST(External, RastersTravelAsBase64Png) {
  const auto inst = task("put-block-into-matching-bowl", 1);
  const WorkspaceConfig cfg;
  Rng rng(1);
  Observation obs = render(inst.scene, cfg, rng, false);
  obs.symbolic = SymbolicSnapshot{inst.scene, inst.goal};
  const json j = observation_json(obs);
  EXPECT_EQ(decode_color_png(base64_decode(j["color_png_b64"].get<std::string>())), obs.color);
  const DepthImage depth = decode_depth_png(base64_decode(j["depth_png_b64"].get<std::string>()));
  ASSERT_EQ(depth.meters.size(), obs.depth.meters.size());
  for (std::size_t i = 0; i < depth.meters.size(); ++i) EXPECT_NEAR(depth.meters[i], obs.depth.meters[i], 0.0005 + 1e-6);
  EXPECT_EQ(symbolic_from_json(j["symbolic"]), *obs.symbolic);

  ExternalPolicyConfig c = config(echo(), 1);
  c.send_rasters = true;
  ExternalPolicy p(c);
  EXPECT_TRUE(p.wants_rasters());
  EXPECT_NO_THROW(p.plan(obs, inst.goal_text));
}

TEST(External, FaultsMapToErrorKinds) {
  const auto inst = task("put-block-into-matching-bowl", 2);
  const Observation obs = first_observation(inst);
  const SubTask st = OraclePolicy(1).plan(obs, inst.goal_text);

  {
    ExternalPolicy p(config(echo("--fault truncate --at 0")));
    EXPECT_EQ(kind_of([&] { p.plan(obs, inst.goal_text); }), PolicyError::Kind::malformed_frame);
  }
  {
    ExternalPolicy p(config(echo("--fault bad-tokens --at 0")));
    EXPECT_EQ(kind_of([&] { p.act(obs, inst.goal_text, st); }), PolicyError::Kind::out_of_range_tokens);
  }
  {
    ExternalPolicy p(config(echo("--fault error --at 0")));
    EXPECT_EQ(kind_of([&] { p.plan(obs, inst.goal_text); }), PolicyError::Kind::error_frame);
    // The client keeps serving after an error frame.
    EXPECT_NO_THROW(p.plan(obs, inst.goal_text));
  }
  {
    ExternalPolicy p(config(echo("--fault crash --at 1")));
    EXPECT_NO_THROW(p.plan(obs, inst.goal_text));
    EXPECT_EQ(kind_of([&] { p.act(obs, inst.goal_text, st); }), PolicyError::Kind::process_failure);
    EXPECT_EQ(kind_of([&] { p.plan(obs, inst.goal_text); }), PolicyError::Kind::process_failure);
  }
  {
    ExternalPolicy p(config("exec /nonexistent/policy-binary"));
    EXPECT_EQ(kind_of([&] { p.plan(obs, inst.goal_text); }), PolicyError::Kind::process_failure);
  }
  {
    ExternalPolicy p(config("echo '{\"id\":0,\"tokens\":[1,2,3]}'; sleep 5"));
    EXPECT_EQ(kind_of([&] { p.act(obs, inst.goal_text, st); }), PolicyError::Kind::malformed_frame);
  }
  {
    ExternalPolicy p(config("echo '{\"id\":0,\"tokens\":[1,2,3,4,5.5,6]}'; sleep 5"));
    EXPECT_EQ(kind_of([&] { p.act(obs, inst.goal_text, st); }), PolicyError::Kind::malformed_frame);
  }
  {
    ExternalPolicy p(config("echo '{\"id\":7,\"tokens\":[1,2,3,4,5,6]}'; sleep 5"));
    EXPECT_EQ(kind_of([&] { p.act(obs, inst.goal_text, st); }), PolicyError::Kind::malformed_frame);
  }
}

TEST(External, TimeoutThenLateAnswerIsSkipped) {
  const auto inst = task("put-block-into-matching-bowl", 3);
  const Observation obs = first_observation(inst);
  ExternalPolicy p(config(echo("--fault sleep --at 0 --sleep-ms 350"), 1, 200ms));
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(kind_of([&] { p.plan(obs, inst.goal_text); }), PolicyError::Kind::timeout);
  const auto waited = std::chrono::steady_clock::now() - start;
  EXPECT_GE(waited, 190ms);
  EXPECT_LT(waited, 340ms);
  // The answer to request 0 arrives during request 1 and is discarded.
  OraclePolicy ref(1);
  (void)ref.plan(obs, inst.goal_text);
  EXPECT_EQ(p.plan(obs, inst.goal_text), ref.plan(obs, inst.goal_text));
}

TEST(External, StaleIdsAreIgnored) {
  const auto inst = task("stack-blocks-of-same-size", 3);
  const Observation obs = first_observation(inst);
  ExternalPolicy p(config(echo("--fault stale --at -1")));
  OraclePolicy ref(1);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(p.plan(obs, inst.goal_text), ref.plan(obs, inst.goal_text));
}

TEST(External, SeedReachesTheClient) {
  const auto inst = task("stack-blocks-of-same-color", 8);
  const Observation obs = first_observation(inst);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ExternalPolicy p(config(echo(), seed));
    OraclePolicy ref(seed);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(p.plan(obs, inst.goal_text), ref.plan(obs, inst.goal_text));
  }
}

TEST(External, CrashedClientCountsProcessFailuresInAnEpisode) {
  const std::string id = "put-block-into-matching-bowl";
  const std::uint64_t seed = episode_seed(1, id, 0);
  const TaskInstance inst = episode_task(id, seed, WorkspaceConfig{});
  ExternalPolicy p(config(echo("--fault crash --at 2")));
  SimEnvironment env(inst, WorkspaceConfig{}, seed);
  const auto res = run_episode(p, env, Strategy::c(2), 10);
  EXPECT_EQ(res.steps, 10);
  EXPECT_GT(res.process_failures, 0);
  EXPECT_LT(res.score, 100.0);
}
