#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tabletop/oracle.hpp"
#include "tabletop/parallel.hpp"
#include "tabletop/policy.hpp"
#include "tabletop/render.hpp"
#include "tabletop/tasks.hpp"
#include "tabletop/world.hpp"

namespace tabletop {

struct Strategy {
  enum class Kind { act_only, replan_always, hierarchical };
  Kind kind = Kind::hierarchical;
  int K = 2;

  static Strategy a() { return {Kind::act_only, 2}; }
  static Strategy b() { return {Kind::replan_always, 2}; }
  static Strategy c(int K = 2) { return {Kind::hierarchical, K}; }

  /// Whether to re-plan at step t given the last reward r and k failures since the last plan.
  bool should_plan(int t, double r, int k) const {
    switch (kind) {
      case Kind::act_only: return t == 0 || r > 0.0;
      case Kind::replan_always: return true;
      case Kind::hierarchical: return t == 0 || r > 0.0 || k > K;
    }
    return true;
  }

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

inline std::string_view to_string(Strategy::Kind k) {
  switch (k) {
    case Strategy::Kind::act_only: return "a";
    case Strategy::Kind::replan_always: return "b";
    case Strategy::Kind::hierarchical: return "c";
  }
  return "?";
}

inline Strategy strategy_from_string(std::string_view s, int K = 2) {
  if (s == "a") return Strategy::a();
  if (s == "b") return Strategy::b();
  if (s == "c") return Strategy::c(K);
  throw std::invalid_argument("strategy must be a, b or c");
}

/// What the controller sees of the world.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Observation observe(bool rasters) = 0;
  /// Throws std::invalid_argument for an action the world cannot execute.
  virtual StepOutcome step(const Action& a) = 0;
  virtual double satisfied_fraction() const = 0;
  virtual const std::string& goal_text() const = 0;
  virtual std::optional<SceneState> state() const { return std::nullopt; }
};

/// The simulator behind the Environment interface. The symbolic channel is always attached.
class SimEnvironment : public Environment {
 public:
  SimEnvironment(TaskInstance task, WorkspaceConfig cfg, std::uint64_t seed)
      : task_(std::move(task)),
        cfg_(cfg),
        state_(task_.scene),
        world_rng_(derive_seed(seed, "world")),
        render_rng_(derive_seed(seed, "render")) {
    cfg_.validate();
  }

  Observation observe(bool rasters) override {
    Observation obs;
    if (rasters) obs = render(state_, cfg_, render_rng_, true);
    obs.symbolic = SymbolicSnapshot{state_, task_.goal};
    return obs;
  }

  StepOutcome step(const Action& a) override {
    auto res = tabletop::step(state_, a, task_.goal, cfg_, world_rng_);
    state_ = std::move(res.state);
    return res.outcome;
  }

  double satisfied_fraction() const override { return task_.goal.satisfied_fraction(state_); }
  const std::string& goal_text() const override { return task_.goal_text; }
  std::optional<SceneState> state() const override { return state_; }

  const TaskInstance& task() const { return task_; }

 private:
  TaskInstance task_;
  WorkspaceConfig cfg_;
  SceneState state_;
  Rng world_rng_;
  Rng render_rng_;
};

struct TranscriptEntry {
  int t = 0;
  bool planned = false;
  std::optional<SubTask> subtask;
  std::optional<Action> action;
  StepOutcome outcome;
  /// Policy or execution error that turned this step into a failure.
  std::string error;
};

struct EpisodeResult {
  double score = 0.0;
  bool success = false;
  int plan_calls = 0;
  int steps = 0;
  std::vector<int> plan_steps;  // timesteps at which plan() was invoked
  std::vector<TranscriptEntry> transcript;
  std::optional<SceneState> final_state;
  /// Set when the planner declared the goal unreachable.
  bool replan_impossible = false;
  /// Policy calls that failed because the policy process died or could not start.
  int process_failures = 0;
};

/// Closed-loop plan/act episode. Policy errors, rejected plans and unexecutable actions are
/// failed steps (r = 0). A step without any current sub-task always plans.
inline EpisodeResult run_episode(Policy& policy, Environment& env, const Strategy& strategy, int step_budget) {
  if (step_budget < 1) throw std::invalid_argument("step_budget must be >= 1");
  if (strategy.K < 0) throw std::invalid_argument("K must be >= 0");
  EpisodeResult res;
  const std::string goal = env.goal_text();
  const bool rasters = policy.wants_rasters();
  std::optional<SubTask> current;
  int t = 0, k = 0;
  double r = 0.0;
  bool done = false;
  Observation obs = env.observe(rasters);
  while (!done && t < step_budget) {
    TranscriptEntry e;
    e.t = t;
    bool failed = false;
    if (strategy.should_plan(t, r, k) || !current) {
      ++res.plan_calls;
      res.plan_steps.push_back(t);
      e.planned = true;
      k = 0;
      try {
        current = policy.plan(obs, goal);
      } catch (const ReplanImpossible&) {
        res.replan_impossible = true;
        break;
      } catch (const AlreadyDone&) {
        break;
      } catch (const PolicyError& err) {
        current.reset();
        failed = true;
        e.error = err.what();
        if (err.kind() == PolicyError::Kind::process_failure) ++res.process_failures;
      }
    }
    e.subtask = current;
    if (!failed) {
      try {
        const Action a = policy.act(obs, goal, *current);
        e.action = a;
        e.outcome = env.step(a);
      } catch (const PolicyError& err) {
        e.error = err.what();
        if (err.kind() == PolicyError::Kind::process_failure) ++res.process_failures;
      } catch (const std::invalid_argument& err) {
        e.error = err.what();
      }
    }
    r = e.outcome.reward;
    done = e.outcome.done;
    if (r == 0.0) ++k;
    ++t;
    res.transcript.push_back(std::move(e));
    if (!done) obs = env.observe(rasters);
  }
  res.steps = t;
  res.final_state = env.state();
  res.score = 100.0 * env.satisfied_fraction();
  res.success = done || env.satisfied_fraction() >= 1.0;
  return res;
}

using PolicyFactory = std::function<std::unique_ptr<Policy>(std::uint64_t seed)>;

inline PolicyFactory oracle_factory() {
  return [](std::uint64_t seed) { return std::make_unique<OraclePolicy>(seed); };
}

struct RolloutConfig {
  Strategy strategy;
  double eps_plan = 0.0;
  double eps_act = 0.0;
  WorkspaceConfig world;  // drop_probability is the disturbance p
  std::optional<int> step_budget;

  bool noiseless() const { return eps_plan == 0.0 && eps_act == 0.0 && world.drop_probability == 0.0; }
};

/// Per-episode seed shared by every strategy, so comparisons are paired.
inline std::uint64_t episode_seed(std::uint64_t master, std::string_view task_id, std::size_t index) {
  return derive_seed(derive_seed(master, fnv1a(task_id)), index);
}

inline int default_step_budget(const TaskInstance& inst, const WorkspaceConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "budget"));
  return 3 * static_cast<int>(oracle_decompose(inst.scene, inst.goal, cfg, rng).size()) + 5;
}

inline TaskInstance episode_task(std::string_view task_id, std::uint64_t seed, const WorkspaceConfig& cfg) {
  Rng rng(derive_seed(seed, "scene"));
  return sample_scene(task_id, rng, cfg);
}

/// One seeded episode of `task_id`: sample the scene, build the (possibly noisy) policy, run.
inline EpisodeResult rollout(std::string_view task_id, std::uint64_t seed, const PolicyFactory& factory,
                             const RolloutConfig& cfg) {
  TaskInstance inst = episode_task(task_id, seed, cfg.world);
  const int budget = cfg.step_budget.value_or(default_step_budget(inst, cfg.world, seed));
  std::unique_ptr<Policy> policy = factory(derive_seed(seed, "policy"));
  if (cfg.eps_plan > 0.0 || cfg.eps_act > 0.0) {
    policy = with_noise(std::move(policy), {cfg.eps_plan, cfg.eps_act, derive_seed(seed, "noise")});
  }
  SimEnvironment env(std::move(inst), cfg.world, seed);
  return run_episode(*policy, env, cfg.strategy, budget);
}

struct EpisodeSummary {
  std::uint64_t seed = 0;
  double score = 0.0;
  bool success = false;
  int plan_calls = 0;
  int steps = 0;
  int process_failures = 0;
  friend bool operator==(const EpisodeSummary&, const EpisodeSummary&) = default;
};

struct ComparisonRow {
  std::string task_id;
  Strategy strategy;
  double mean_score = 0.0;
  double success_rate = 0.0;
  double mean_plan_calls = 0.0;
  std::size_t episodes = 0;
  std::vector<EpisodeSummary> per_episode;  // ordered by episode index
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Standard error of the mean (sample standard deviation over sqrt(n)).
inline double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline ComparisonRow summarize(std::string task_id, Strategy strategy, std::vector<EpisodeSummary> eps) {
  ComparisonRow row{std::move(task_id), strategy, 0, 0, 0, eps.size(), std::move(eps)};
  for (const auto& e : row.per_episode) {
    row.mean_score += e.score;
    row.success_rate += e.success ? 1.0 : 0.0;
    row.mean_plan_calls += e.plan_calls;
  }
  if (row.episodes > 0) {
    const double n = static_cast<double>(row.episodes);
    row.mean_score /= n;
    row.success_rate /= n;
    row.mean_plan_calls /= n;
  }
  return row;
}

struct CompareConfig {
  std::vector<std::string> task_ids;
  std::size_t episodes = 20;
  std::uint64_t master_seed = 0;
  std::vector<Strategy> strategies{Strategy::a(), Strategy::b(), Strategy::c()};
  RolloutConfig rollout;  // strategy field ignored
  std::size_t workers = 1;
};

/// Every (task, strategy) over the same episode seeds. Output order is (task, strategy) as
/// given, independent of the worker count.
inline std::vector<ComparisonRow> compare_strategies(const CompareConfig& cfg, const PolicyFactory& factory) {
  if (cfg.task_ids.empty() || cfg.episodes == 0) throw std::invalid_argument("need at least one task and one seed");
  const std::size_t ns = cfg.strategies.size();
  const std::size_t per_task = ns * cfg.episodes;
  std::vector<EpisodeSummary> out(cfg.task_ids.size() * per_task);
  parallel_for(out.size(), cfg.workers, [&](std::size_t job) {
    const std::size_t ti = job / per_task;
    const std::size_t si = (job % per_task) / cfg.episodes;
    const std::size_t ei = job % cfg.episodes;
    RolloutConfig rc = cfg.rollout;
    rc.strategy = cfg.strategies[si];
    const std::uint64_t seed = episode_seed(cfg.master_seed, cfg.task_ids[ti], ei);
    const EpisodeResult r = rollout(cfg.task_ids[ti], seed, factory, rc);
    out[job] = {seed, r.score, r.success, r.plan_calls, r.steps, r.process_failures};
  });
  std::vector<ComparisonRow> rows;
  for (std::size_t ti = 0; ti < cfg.task_ids.size(); ++ti) {
    for (std::size_t si = 0; si < ns; ++si) {
      const auto first = out.begin() + static_cast<std::ptrdiff_t>(ti * per_task + si * cfg.episodes);
      rows.push_back(summarize(cfg.task_ids[ti], cfg.strategies[si],
                               {first, first + static_cast<std::ptrdiff_t>(cfg.episodes)}));
    }
  }
  return rows;
}

namespace detail {

inline std::string fixed(double v, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

}  // namespace detail

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "task_id,strategy,mean_score,success_rate,mean_plan_calls,episodes\n";
  for (const auto& r : rows) {
    os << r.task_id << ',' << to_string(r.strategy.kind) << ',' << detail::fixed(r.mean_score, 4) << ','
       << detail::fixed(r.success_rate, 4) << ',' << detail::fixed(r.mean_plan_calls, 4) << ',' << r.episodes << '\n';
  }
  return os.str();
}

/// Fixed-width table; the first column is padded to the longest cell.
inline std::string aligned_table(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) os << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      else os << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
    }
    os << '\n';
  }
  return os.str();
}

inline std::string comparison_table(const std::vector<ComparisonRow>& rows) {
  std::vector<std::vector<std::string>> cells{
      {"task_id", "strategy", "mean_score", "success_rate", "mean_plan_calls", "episodes"}};
  for (const auto& r : rows) {
    cells.push_back({r.task_id, std::string(to_string(r.strategy.kind)), detail::fixed(r.mean_score, 2),
                     detail::fixed(r.success_rate, 3), detail::fixed(r.mean_plan_calls, 2), std::to_string(r.episodes)});
  }
  return aligned_table(cells);
}

}  // namespace tabletop
