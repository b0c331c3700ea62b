#include <gtest/gtest.h>

#include "tabletop/eval.hpp"

using namespace tabletop;

TEST(Score, EightOfTenIsEighty) {
  EXPECT_DOUBLE_EQ(score_from_counts(8, 10), 80.0);
  EXPECT_DOUBLE_EQ(score_from_counts(0, 4), 0.0);
  EXPECT_DOUBLE_EQ(score_from_counts(3, 3), 100.0);
}

TEST(Score, EqualsTheRewardSumWithoutDisturbances) {
  // With action noise only, the satisfied fraction never drops below what was credited, so
  // the final-state score equals 100 x the sum of rewards.
  RolloutConfig rc;
  rc.strategy = Strategy::c(2);
  rc.eps_act = 0.3;
  int episodes = 0;
  for (const auto& id : long_horizon_task_ids()) {
    for (std::size_t i = 0; i < 5; ++i) {
      const std::uint64_t seed = episode_seed(31, id, i);
      const auto r = rollout(id, seed, oracle_factory(), rc);
      double total = 0.0;
      for (const auto& e : r.transcript) total += e.outcome.reward;
      const TaskInstance inst = episode_task(id, seed, rc.world);
      EXPECT_NEAR(score_episode(r, inst.goal), 100.0 * total, 1e-9) << id << " #" << i;
      EXPECT_NEAR(score_episode(r, inst.goal), r.score, 1e-9);
      ++episodes;
    }
  }
  EXPECT_EQ(episodes, 100);
}

TEST(Score, FinalStateScoreCanTrailCreditedRewardWhenBlocksFall) {
  // Drops can undo credited progress; the score is read off the final state either way.
  RolloutConfig rc;
  rc.strategy = Strategy::a();
  rc.world.drop_probability = 0.3;
  for (std::size_t i = 0; i < 40; ++i) {
    const std::string id = "stack-blocks-of-same-size";
    const std::uint64_t seed = episode_seed(4, id, i);
    const auto r = rollout(id, seed, oracle_factory(), rc);
    double total = 0.0;
    for (const auto& e : r.transcript) total += e.outcome.reward;
    EXPECT_LE(r.score, 100.0 * total + 1e-9);
    EXPECT_NEAR(score_episode(r, episode_task(id, seed, rc.world).goal), r.score, 1e-9);
  }
}

TEST(PlanningAccuracy, OracleIsPerfect) {
  ProbeConfig cfg;
  cfg.task_ids = long_horizon_task_ids();
  cfg.samples_per_task = 10;
  cfg.workers = 4;
  const auto r = planning_accuracy(cfg, oracle_factory());
  EXPECT_EQ(r.samples, 200u);
  EXPECT_DOUBLE_EQ(r.accuracy(), 1.0);
  for (const auto& [task, acc] : r.per_task) EXPECT_DOUBLE_EQ(acc, 1.0) << task;
}

TEST(PlanningAccuracy, FullPlanNoiseIsAlwaysWrong) {
  ProbeConfig cfg;
  cfg.task_ids = long_horizon_task_ids();
  cfg.samples_per_task = 10;
  cfg.eps_plan = 1.0;
  const auto r = planning_accuracy(cfg, oracle_factory());
  EXPECT_DOUBLE_EQ(r.accuracy(), 0.0);
}

TEST(PlanningAccuracy, HalfPlanNoiseIsAboutHalf) {
  ProbeConfig cfg;
  cfg.task_ids = long_horizon_task_ids();
  cfg.samples_per_task = 20;
  cfg.eps_plan = 0.5;
  cfg.master_seed = 8;
  cfg.workers = 4;
  const auto r = planning_accuracy(cfg, oracle_factory());
  EXPECT_EQ(r.samples, 400u);
  EXPECT_NEAR(r.accuracy(), 0.5, 0.06);
  cfg.workers = 1;
  EXPECT_EQ(planning_accuracy(cfg, oracle_factory()).hits, r.hits);
}

TEST(Metrics, ReportFormats) {
  ComparisonRow row;
  row.task_id = "stack-blocks-of-same-color";
  row.strategy = Strategy::c();
  row.mean_score = 87.5;
  row.success_rate = 0.75;
  row.mean_plan_calls = 4.25;
  row.episodes = 4;
  MetricsReport m = MetricsReport::from_rows({row});
  m.tasks[0].planning_accuracy = 0.9;
  EXPECT_EQ(m.csv(),
            "task_id,mean_score,success_rate,mean_plan_calls,episodes,planning_accuracy\n"
            "stack-blocks-of-same-color,87.5000,0.7500,4.2500,4,0.9000\n");
  const std::string t = m.table();
  EXPECT_NE(t.find("87.50"), std::string::npos);
  EXPECT_NE(t.find("0.900"), std::string::npos);
}
