#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabletop/control.hpp"
#include "tabletop/oracle.hpp"
#include "tabletop/policy.hpp"
#include "tabletop/tasks.hpp"

namespace tabletop {

/// 100 x satisfied / total, with `total` scored sub-goals.
inline double score_from_counts(std::size_t satisfied, std::size_t total) {
  if (total == 0) return 100.0;
  return 100.0 * static_cast<double>(satisfied) / static_cast<double>(total);
}

/// Score recomputed from the episode's final state; falls back to the controller's score
/// when the environment exposed no state.
inline double score_episode(const EpisodeResult& r, const GoalCondition& goal) {
  if (!r.final_state) return r.score;
  return score_from_counts(goal.satisfied_count(*r.final_state), goal.scored_count());
}

struct TaskMetrics {
  std::string task_id;
  double mean_score = 0.0;
  double success_rate = 0.0;
  double mean_plan_calls = 0.0;
  std::size_t episodes = 0;
  std::optional<double> planning_accuracy;
};

struct MetricsReport {
  std::vector<TaskMetrics> tasks;

  static MetricsReport from_rows(const std::vector<ComparisonRow>& rows) {
    MetricsReport m;
    for (const auto& r : rows) m.tasks.push_back({r.task_id, r.mean_score, r.success_rate, r.mean_plan_calls, r.episodes, {}});
    return m;
  }

  std::string csv() const {
    std::ostringstream os;
    os << "task_id,mean_score,success_rate,mean_plan_calls,episodes,planning_accuracy\n";
    for (const auto& t : tasks) {
      os << t.task_id << ',' << detail::fixed(t.mean_score, 4) << ',' << detail::fixed(t.success_rate, 4) << ','
         << detail::fixed(t.mean_plan_calls, 4) << ',' << t.episodes << ','
         << (t.planning_accuracy ? detail::fixed(*t.planning_accuracy, 4) : "") << '\n';
    }
    return os.str();
  }

  std::string table() const {
    std::vector<std::vector<std::string>> cells{
        {"task_id", "mean_score", "success_rate", "mean_plan_calls", "episodes", "planning_accuracy"}};
    for (const auto& t : tasks) {
      cells.push_back({t.task_id, detail::fixed(t.mean_score, 2), detail::fixed(t.success_rate, 3),
                       detail::fixed(t.mean_plan_calls, 2), std::to_string(t.episodes),
                       t.planning_accuracy ? detail::fixed(*t.planning_accuracy, 3) : "-"});
    }
    return aligned_table(cells);
  }
};

struct ProbeConfig {
  std::vector<std::string> task_ids;
  std::size_t samples_per_task = 10;
  std::uint64_t master_seed = 0;
  double eps_plan = 0.0;
  WorkspaceConfig world;
  std::size_t workers = 1;
};

struct ProbeResult {
  std::vector<std::pair<std::string, double>> per_task;  // in task order
  std::size_t hits = 0;
  std::size_t samples = 0;
  double accuracy() const { return samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0; }
};

/// Samples mid-episode states from noiseless oracle rollouts at random timesteps and checks
/// whether the policy's sub-task is equivalent to one of the valid next sub-tasks there.
inline ProbeResult planning_accuracy(const ProbeConfig& cfg, const PolicyFactory& factory) {
  const std::size_t n = cfg.task_ids.size() * cfg.samples_per_task;
  std::vector<char> hit(n, 0);
  WorkspaceConfig quiet = cfg.world;
  quiet.drop_probability = 0.0;
  parallel_for(n, cfg.workers, [&](std::size_t job) {
    const std::string& task = cfg.task_ids[job / cfg.samples_per_task];
    const std::uint64_t seed = episode_seed(cfg.master_seed, task, job % cfg.samples_per_task);
    const TaskInstance inst = episode_task(task, seed, quiet);
    Rng rng(derive_seed(seed, "probe"));
    const auto plan = oracle_decompose(inst.scene, inst.goal, quiet, rng);
    const std::size_t tau = uniform_index(rng, plan.size());
    SceneState s = inst.scene;
    Rng unused(0);
    for (std::size_t i = 0; i < tau; ++i) s = step(s, plan[i].action, inst.goal, quiet, unused).state;

    std::unique_ptr<Policy> policy = factory(derive_seed(seed, "policy"));
    if (cfg.eps_plan > 0.0) policy = with_noise(std::move(policy), {cfg.eps_plan, 0.0, derive_seed(seed, "noise")});
    Observation obs;
    if (policy->wants_rasters()) {
      Rng render_rng(derive_seed(seed, "render"));
      obs = render(s, quiet, render_rng, false);
    }
    obs.symbolic = SymbolicSnapshot{s, inst.goal};
    const auto valid = valid_next_subtasks(s, inst.goal).options;
    try {
      const SubTask predicted = resolve(policy->plan(obs, inst.goal_text), s);
      hit[job] = subtask_equivalent(predicted, valid) ? 1 : 0;
    } catch (const SubTaskResolutionError&) {
      hit[job] = 0;
    } catch (const PolicyError&) {
      hit[job] = 0;
    }
  });
  ProbeResult out;
  for (std::size_t ti = 0; ti < cfg.task_ids.size(); ++ti) {
    std::size_t h = 0;
    for (std::size_t i = 0; i < cfg.samples_per_task; ++i) h += hit[ti * cfg.samples_per_task + i] ? 1 : 0;
    out.hits += h;
    out.samples += cfg.samples_per_task;
    out.per_task.emplace_back(cfg.task_ids[ti], cfg.samples_per_task
                                                    ? static_cast<double>(h) / static_cast<double>(cfg.samples_per_task)
                                                    : 0.0);
  }
  return out;
}

}  // namespace tabletop
