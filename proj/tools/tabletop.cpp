// tabletop: dataset generation, rollouts, strategy comparison, planning probe, dataset
// inspection. Machine-readable output goes to stdout, progress and diagnostics to stderr.

#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tabletop/control.hpp"
#include "tabletop/dataset.hpp"
#include "tabletop/eval.hpp"
#include "tabletop/external_policy.hpp"
#include "tabletop/tasks.hpp"

namespace {

using namespace tabletop;

enum Exit { kOk = 0, kUsage = 2, kPolicyFailure = 3, kIo = 4 };

struct Options {
  std::string task = "all";
  std::size_t episodes = 20;
  std::uint64_t seed = 0;
  std::string strategy = "c";
  int K = 2;
  double eps_plan = 0.0;
  double eps_act = 0.0;
  double p = 0.0;
  int step_budget = 0;  // 0: 3 x oracle length + 5
  std::string policy = "oracle";
  std::string out;
  std::size_t parallel = 1;
  int timeout_ms = 10000;
  std::string format = "csv";
  std::string split;
  std::size_t samples = 10;
};

void log(const std::string& msg) { std::cerr << "tabletop: " << msg << '\n'; }

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> resolve_tasks(const std::string& selector, bool long_horizon_only = false) {
  if (selector == "all") return long_horizon_only ? long_horizon_task_ids() : all_task_ids();
  if (selector == "long-horizon") return long_horizon_task_ids();
  if (selector == "seen" || selector == "unseen" || selector == "additional") {
    std::vector<std::string> out;
    for (const auto& t : task_catalog()) {
      if (to_string(t.split) == selector) out.emplace_back(t.id);
    }
    return out;
  }
  std::vector<std::string> out;
  std::stringstream ss(selector);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (!find_task(id)) throw UnknownTask(id);
    out.push_back(id);
  }
  if (out.empty()) throw UsageError("--task is empty");
  return out;
}

PolicyFactory make_factory(const Options& o) {
  if (o.policy == "oracle") return oracle_factory();
  if (o.policy.rfind("exec:", 0) == 0) {
    const std::string cmd = o.policy.substr(5);
    if (cmd.empty()) throw UsageError("--policy exec: needs a command");
    const int timeout = o.timeout_ms;
    return [cmd, timeout](std::uint64_t seed) -> std::unique_ptr<Policy> {
      ExternalPolicyConfig cfg;
      cfg.command = cmd;
      cfg.timeout = std::chrono::milliseconds(timeout);
      cfg.seed = seed;
      return std::make_unique<ExternalPolicy>(cfg);
    };
  }
  throw UsageError("--policy must be 'oracle' or 'exec:<command>'");
}

RolloutConfig rollout_config(const Options& o) {
  RolloutConfig rc;
  rc.strategy = strategy_from_string(o.strategy, o.K);
  rc.eps_plan = o.eps_plan;
  rc.eps_act = o.eps_act;
  rc.world.drop_probability = o.p;
  if (o.step_budget > 0) rc.step_budget = o.step_budget;
  NoiseConfig{o.eps_plan, o.eps_act, 0}.validate();
  rc.world.validate();
  if (o.K < 0) throw UsageError("--K must be >= 0");
  return rc;
}

void print_catalog(std::ostream& os) {
  json out = json::array();
  for (const auto& t : task_catalog()) {
    json modes = json::array();
    for (auto m : t.match_modes) modes.push_back(to_string(m));
    out.push_back({{"id", t.id},
                   {"letter", t.letter},
                   {"split", to_string(t.split)},
                   {"long_horizon", t.long_horizon},
                   {"instruction", t.instruction_template},
                   {"match_modes", modes},
                   {"sampler", t.sampler}});
  }
  os << out.dump(2) << '\n';
}

int cmd_catalog() {
  print_catalog(std::cout);
  return kOk;
}

int cmd_generate(const Options& o) {
  if (o.out.empty()) throw UsageError("generate needs --out");
  GenerateConfig cfg;
  cfg.task_ids = resolve_tasks(o.task);
  cfg.episodes = o.episodes;
  cfg.master_seed = o.seed;
  cfg.workers = o.parallel;
  log("generating " + std::to_string(cfg.task_ids.size() * cfg.episodes) + " episode(s) into " + o.out);
  const json manifest = generate_dataset(cfg, o.out, log);
  json summary{{"out", o.out},
               {"config_hash", manifest["config_hash"]},
               {"episodes", manifest["episodes"].size()},
               {"total_subtasks", manifest["total_subtasks"]},
               {"rejected", manifest["rejected"]},
               {"manifest_sha256", sha256_hex(manifest.dump(1))}};
  std::cout << summary.dump() << '\n';
  return kOk;
}

int cmd_rollout(const Options& o, bool k_given) {
  if (k_given && o.strategy != "c") throw UsageError("--K only applies to --strategy c");
  const RolloutConfig rc = rollout_config(o);
  const auto tasks = resolve_tasks(o.task);
  const auto factory = make_factory(o);
  const std::size_t n = tasks.size() * o.episodes;
  std::vector<EpisodeSummary> out(n);
  parallel_for(n, o.parallel, [&](std::size_t job) {
    const auto& task = tasks[job / o.episodes];
    const std::uint64_t seed = episode_seed(o.seed, task, job % o.episodes);
    const EpisodeResult r = rollout(task, seed, factory, rc);
    out[job] = {seed, r.score, r.success, r.plan_calls, r.steps, r.process_failures};
  });
  int failures = 0;
  std::cout << "task_id,episode,seed,strategy,score,success,plan_calls,steps\n";
  for (std::size_t job = 0; job < n; ++job) {
    const auto& e = out[job];
    failures += e.process_failures;
    std::cout << tasks[job / o.episodes] << ',' << job % o.episodes << ',' << e.seed << ',' << o.strategy << ','
              << detail::fixed(e.score, 4) << ',' << (e.success ? 1 : 0) << ',' << e.plan_calls << ',' << e.steps
              << '\n';
  }
  if (failures > 0) {
    log("policy process failed " + std::to_string(failures) + " time(s)");
    return kPolicyFailure;
  }
  return kOk;
}

int cmd_compare(const Options& o) {
  CompareConfig cfg;
  cfg.task_ids = resolve_tasks(o.task, true);
  cfg.episodes = o.episodes;
  cfg.master_seed = o.seed;
  cfg.workers = o.parallel;
  Options base = o;
  base.strategy = "c";
  cfg.rollout = rollout_config(base);
  cfg.strategies = {Strategy::a(), Strategy::b(), Strategy::c(o.K)};
  log("comparing strategies a/b/c on " + std::to_string(cfg.task_ids.size()) + " task(s) x " +
      std::to_string(cfg.episodes) + " paired episode(s)");
  const auto rows = compare_strategies(cfg, make_factory(o));
  std::cout << (o.format == "table" ? comparison_table(rows) : comparison_csv(rows));
  for (const auto& r : rows) {
    for (const auto& e : r.per_episode) {
      if (e.process_failures > 0) {
        log("policy process failures occurred");
        return kPolicyFailure;
      }
    }
  }
  return kOk;
}

int cmd_probe(const Options& o) {
  ProbeConfig cfg;
  cfg.task_ids = resolve_tasks(o.task);
  cfg.samples_per_task = o.samples;
  cfg.master_seed = o.seed;
  cfg.eps_plan = o.eps_plan;
  cfg.workers = o.parallel;
  NoiseConfig{o.eps_plan, 0.0, 0}.validate();
  const auto res = planning_accuracy(cfg, make_factory(o));
  std::cout << "task_id,planning_accuracy,samples\n";
  for (const auto& [task, acc] : res.per_task) std::cout << task << ',' << detail::fixed(acc, 4) << ',' << o.samples << '\n';
  std::cout << "overall," << detail::fixed(res.accuracy(), 4) << ',' << res.samples << '\n';
  return kOk;
}

int cmd_inspect(const Options& o) {
  if (o.out.empty()) throw UsageError("inspect needs --out <dataset dir>");
  const Dataset ds(o.out);
  std::optional<std::string> split;
  if (!o.split.empty()) split = o.split;
  const auto selected = ds.select(split);
  json bad = json::array();
  json per_task = json::object();
  std::size_t ok = 0;
  ds.for_each(
      selected,
      [&](std::size_t, const EpisodeRecord& r) {
        ++ok;
        auto& t = per_task[r.task_id];
        if (t.is_null()) t = {{"episodes", 0}, {"steps", 0}, {"split", r.split}};
        t["episodes"] = t["episodes"].get<int>() + 1;
        t["steps"] = t["steps"].get<std::size_t>() + r.steps.size();
      },
      [&](std::size_t i, const DatasetError& err) {
        bad.push_back({{"path", ds.entries()[i].path}, {"error", err.what()}});
      });
  json out{{"root", o.out},
           {"schema_version", ds.manifest()["schema_version"]},
           {"config_hash", ds.manifest()["config_hash"]},
           {"selected", selected.size()},
           {"verified", ok},
           {"tasks", per_task},
           {"corrupt", bad}};
  std::cout << out.dump(2) << '\n';
  return bad.empty() ? kOk : kIo;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Tabletop pick-and-place long-horizon task harness"};
  app.set_config("--config", "", "Read options from a TOML/INI file; flags override it");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  auto* dump_config =
      app.add_flag("--dump-config", "Print the options given (flags and --config) as TOML and exit")->configurable(false);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--task", o.task, "Task id, comma-separated ids, or all/seen/unseen/additional/long-horizon");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--parallel", o.parallel, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_policy = [&](CLI::App* sub) {
    sub->add_option("--policy", o.policy, "oracle or exec:<command>");
    sub->add_option("--timeout-ms", o.timeout_ms, "Per-request timeout for exec policies")->check(CLI::PositiveNumber);
    sub->add_option("--eps-plan", o.eps_plan, "Probability of a planning error")->check(CLI::Range(0.0, 1.0));
  };
  auto add_rollout = [&](CLI::App* sub) {
    add_common(sub);
    add_policy(sub);
    sub->add_option("--episodes", o.episodes, "Episodes per task")->check(CLI::PositiveNumber);
    sub->add_option("--eps-act", o.eps_act, "Probability of an action error")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--p", o.p, "Per-transport-step drop probability")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--step-budget", o.step_budget, "Steps per episode (0: 3 x oracle length + 5)");
  };

  auto* generate = app.add_subcommand("generate", "Write replay-verified oracle demonstrations");
  add_common(generate);
  generate->add_option("--episodes", o.episodes, "Episodes per task")->check(CLI::PositiveNumber);
  generate->add_option("--out", o.out, "Output directory")->required();

  auto* rollout_cmd = app.add_subcommand("rollout", "Run episodes and print one CSV row per episode");
  add_rollout(rollout_cmd);
  rollout_cmd->add_option("--strategy", o.strategy, "Control strategy")->check(CLI::IsMember({"a", "b", "c"}));
  auto* k_opt = rollout_cmd->add_option("--K", o.K, "Failure threshold of strategy c");

  auto* compare = app.add_subcommand("compare", "Compare strategies a/b/c over paired seeds");
  add_rollout(compare);
  compare->add_option("--K", o.K, "Failure threshold of strategy c");
  compare->add_option("--format", o.format, "csv or table")->check(CLI::IsMember({"csv", "table"}));

  auto* probe = app.add_subcommand("probe-planning", "Planning accuracy at sampled mid-episode states");
  add_common(probe);
  add_policy(probe);
  probe->add_option("--samples", o.samples, "Sampled states per task")->check(CLI::PositiveNumber);

  auto* inspect = app.add_subcommand("inspect", "Verify a dataset and summarize it");
  inspect->add_option("--out", o.out, "Dataset directory")->required();
  inspect->add_option("--split", o.split, "Only this split")->check(CLI::IsMember({"", "seen", "unseen", "additional"}));

  auto* catalog = app.add_subcommand("catalog", "Print the task catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  if (*dump_config) {
    std::cout << app.config_to_str(false, false);
    return kOk;
  }

  try {
    if (*catalog) return cmd_catalog();
    if (*generate) return cmd_generate(o);
    if (*rollout_cmd) return cmd_rollout(o, k_opt->count() > 0);
    if (*compare) return cmd_compare(o);
    if (*probe) return cmd_probe(o);
    if (*inspect) return cmd_inspect(o);
  } catch (const UnknownTask& e) {
    log(e.what());
    std::cerr << "known tasks:\n";
    for (const auto& id : all_task_ids()) std::cerr << "  " << id << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    log(e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    log(e.what());
    return kUsage;
  } catch (const ProcessError& e) {
    log(e.what());
    return kPolicyFailure;
  } catch (const PolicyError& e) {
    log(e.what());
    return kPolicyFailure;
  } catch (const DatasetError& e) {
    log(e.what());
    return kIo;
  } catch (const ImageIoError& e) {
    log(e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    log(e.what());
    return kIo;
  }
  return kUsage;
}
