#include <gtest/gtest.h>

#include <cmath>

#include "tabletop/control.hpp"
#include "tabletop/policy.hpp"
#include "tabletop/tasks.hpp"

using namespace tabletop;

namespace {

Observation symbolic_obs(const TaskInstance& inst) {
  Observation obs;
  obs.symbolic = SymbolicSnapshot{inst.scene, inst.goal};
  return obs;
}

TaskInstance task(std::string_view id, std::uint64_t seed) {
  Rng rng(seed);
  return sample_scene(id, rng);
}

// Counts calls and always answers the same thing.
class FixedPolicy : public Policy {
 public:
  FixedPolicy(SubTask st, Action a) : st_(std::move(st)), a_(a) {}
  SubTask plan(const Observation&, std::string_view) override {
    ++plans;
    return st_;
  }
  Action act(const Observation&, std::string_view, const SubTask&) override {
    ++acts;
    return a_;
  }
  bool wants_rasters() const override { return true; }
  int plans = 0;
  int acts = 0;

 private:
  SubTask st_;
  Action a_;
};

}  // namespace

TEST(OraclePolicy, RequiresTheSymbolicChannel) {
  OraclePolicy p(1);
  const Observation empty;
  try {
    p.plan(empty, "goal");
    FAIL();
  } catch (const PolicyError& e) {
    EXPECT_EQ(e.kind(), PolicyError::Kind::missing_symbolic);
    EXPECT_STREQ(e.what(), "oracle requires symbolic channel");
  }
  EXPECT_THROW(p.act(empty, "goal", SubTask{}), PolicyError);
}

TEST(OraclePolicy, UnresolvableSubTaskStillActs) {
  const auto inst = task("pick-and-place-primitive", 3);
  OraclePolicy p(1);
  SubTask st;
  st.source = {99, ObjectKind::block, Color::red, std::nullopt};
  const Action a = p.act(symbolic_obs(inst), inst.goal_text, st);
  EXPECT_DOUBLE_EQ(a.pick.x, 0.5);
  EXPECT_DOUBLE_EQ(a.place.y, 0.25);
}

TEST(NoisyPolicy, ZeroNoiseIsTheIdentity) {
  for (const auto& id : long_horizon_task_ids()) {
    const auto inst = task(id, 11);
    OraclePolicy bare(5);
    NoisyPolicy wrapped(std::make_unique<OraclePolicy>(5), {0.0, 0.0, 77});
    const auto obs = symbolic_obs(inst);
    for (int i = 0; i < 5; ++i) {
      const SubTask a = bare.plan(obs, inst.goal_text);
      const SubTask b = wrapped.plan(obs, inst.goal_text);
      EXPECT_EQ(a, b);
      EXPECT_EQ(bare.act(obs, inst.goal_text, a), wrapped.act(obs, inst.goal_text, b));
    }
    EXPECT_EQ(wrapped.counters().plan_corruptions, 0u);
    EXPECT_EQ(wrapped.counters().act_corruptions, 0u);
  }
}

TEST(NoisyPolicy, FullPlanNoiseNeverProposesAValidNextSubTask) {
  const auto ids = long_horizon_task_ids();
  int calls = 0;
  for (std::uint64_t seed = 0; calls < 100; ++seed) {
    const auto inst = task(ids[seed % ids.size()], seed);
    NoisyPolicy p(std::make_unique<OraclePolicy>(seed), {1.0, 0.0, seed});
    const auto obs = symbolic_obs(inst);
    const auto valid = valid_next_subtasks(inst.scene, inst.goal).options;
    const SubTask st = p.plan(obs, inst.goal_text);
    EXPECT_FALSE(subtask_equivalent(st, valid)) << inst.task_id << ": " << st.text;
    // Well formed: resolves against the scene and renders the same text.
    EXPECT_EQ(resolve(st, inst.scene), st);
    ++calls;
  }
}

TEST(NoisyPolicy, ActNoiseRateAndMagnitude) {
  const auto inst = task("put-block-into-matching-bowl", 2);
  const auto obs = symbolic_obs(inst);
  Rng choice(1);
  const SubTask st = oracle_next(inst.scene, inst.goal, choice).subtask;
  const Action clean = OraclePolicy(1).act(obs, inst.goal_text, st);
  NoisyPolicy p(std::make_unique<OraclePolicy>(1), {0.0, 0.3, 42});
  const int n = 10000;
  int corrupted = 0;
  for (int i = 0; i < n; ++i) {
    const Action a = p.act(obs, inst.goal_text, st);
    EXPECT_EQ(a.pick, clean.pick);
    const double d = std::hypot(a.place.x - clean.place.x, a.place.y - clean.place.y);
    if (d > 0.0) {
      ++corrupted;
      EXPECT_GE(d, NoisyPolicy::kMinOffset - 1e-12);
      EXPECT_LE(d, NoisyPolicy::kMaxOffset + 1e-12);
    }
  }
  EXPECT_EQ(static_cast<std::size_t>(corrupted), p.counters().act_corruptions);
  EXPECT_NEAR(static_cast<double>(corrupted) / n, 0.3, 0.02);
}

TEST(NoisyPolicy, PlanNoiseRate) {
  const auto inst = task("stack-blocks-of-same-color", 4);
  const auto obs = symbolic_obs(inst);
  const auto valid = valid_next_subtasks(inst.scene, inst.goal).options;
  NoisyPolicy p(std::make_unique<OraclePolicy>(1), {0.25, 0.0, 9});
  const int n = 4000;
  int wrong = 0;
  for (int i = 0; i < n; ++i) wrong += subtask_equivalent(p.plan(obs, inst.goal_text), valid) ? 0 : 1;
  EXPECT_NEAR(static_cast<double>(wrong) / n, 0.25, 0.03);
}

TEST(NoisyPolicy, DisplacementTurnsAroundAtTheTableEdge) {
  const Rect bounds{0.0, 0.0, 1.0, 0.5};
  const Pose edge{0.99, 0.25, 0.0};
  const Pose q = NoisyPolicy::displaced(edge, 0.03, 0.0, bounds);
  EXPECT_NEAR(q.x, 0.96, 1e-12);
  EXPECT_NEAR(q.y, 0.25, 1e-12);
  const Pose inside = NoisyPolicy::displaced({0.5, 0.25, 0.0}, 0.04, kPi / 2, bounds);
  EXPECT_NEAR(inside.y, 0.29, 1e-12);
}

TEST(NoisyPolicy, ComposesWithAnyInnerPolicyAndStacks) {
  const auto inst = task("pick-and-place-primitive", 5);
  const auto obs = symbolic_obs(inst);
  const SubTask st = make_subtask(ObjectRef::of(inst.scene.at(inst.goal.sub_goals[0].object)), SubTaskTarget::table());
  const Action a{{0.3, 0.2, 0.0}, {0.6, 0.3, 0.0}};
  auto fixed = std::make_unique<FixedPolicy>(st, a);
  FixedPolicy* raw = fixed.get();
  auto twice = with_noise(with_noise(std::move(fixed), {0.0, 0.0, 1}), {0.0, 0.0, 2});
  EXPECT_TRUE(twice->wants_rasters());
  EXPECT_EQ(twice->plan(obs, inst.goal_text), st);
  EXPECT_EQ(twice->act(obs, inst.goal_text, st), a);
  EXPECT_EQ(raw->plans, 1);
  EXPECT_EQ(raw->acts, 1);
  EXPECT_THROW(NoisyPolicy(std::make_unique<FixedPolicy>(st, a), {1.5, 0.0, 0}), std::invalid_argument);
}

TEST(SubTaskSpace, IncludesAreasAndRelativeTargetsOnlyWhenTheGoalUsesThem) {
  auto has_kind = [](const std::vector<SubTask>& v, TargetKind k) {
    return std::any_of(v.begin(), v.end(), [k](const SubTask& s) { return s.target.kind == k; });
  };
  const auto bowls = task("put-block-into-matching-bowl", 1);
  const auto space = subtask_space(bowls.scene, bowls.goal);
  EXPECT_FALSE(has_kind(space, TargetKind::area));
  EXPECT_FALSE(has_kind(space, TargetKind::relative));
  EXPECT_TRUE(has_kind(space, TargetKind::table));
  std::size_t blocks = 0;
  for (const auto& o : bowls.scene.objects) blocks += o.kind == ObjectKind::block ? 1 : 0;
  EXPECT_EQ(space.size(), blocks * bowls.scene.objects.size());

  const auto areas = task("move-blocks-between-absolute-positions", 1);
  EXPECT_TRUE(has_kind(subtask_space(areas.scene, areas.goal), TargetKind::area));
  const auto rel = task("stack-blocks-by-relative-position", 1);
  EXPECT_TRUE(has_kind(subtask_space(rel.scene, rel.goal), TargetKind::relative));
}
