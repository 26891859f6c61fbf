#include "lumen/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <utility>

#include "lumen/errors.hpp"
#include "lumen/json_util.hpp"
#include "lumen/lumen_env.hpp"

namespace lumen::bench {

namespace {

constexpr int kReportSchemaVersion = 1;

// Stable sub-stream seeds per environment: sampling, training and
// evaluation never share a generator.
struct EnvSeeds {
  std::uint64_t sample;
  std::uint64_t train;
  std::uint64_t eval;
};

EnvSeeds env_seeds(std::uint64_t master, int index) {
  const std::uint64_t base = child_seed(master, static_cast<std::uint64_t>(index));
  return {splitmix64(base + 1), splitmix64(base + 2), splitmix64(base + 3)};
}

EnvReport run_environment(const BenchmarkSpec& spec, int index) {
  const EnvSeeds seeds = env_seeds(spec.master_seed, index);

  Rng sample_rng(seeds.sample);
  geom::BifurcationParams params;
  try {
    params = geom::sample_params(spec.param_ranges, sample_rng);
  } catch (const InfeasibleRange& e) {
    throw InfeasibleRange(e.field(),
                          e.message() + " (environment " + std::to_string(index) + ")");
  }
  const geom::LumenMap map = geom::generate_bifurcation(params, spec.goal);

  rl::LumenEnv env(map, spec.robot, spec.agent, spec.reward);
  Rng train_rng(seeds.train);
  rl::TrainResult trained =
      rl::train(env, spec.agent, spec.reward, spec.n_train_episodes, train_rng);

  Rng eval_rng(seeds.eval);
  const EvalSummary summary = evaluate(env, trained.table, spec.agent, spec.reward,
                                       spec.n_eval_episodes, eval_rng);

  EnvReport report;
  report.index = index;
  report.seed = child_seed(spec.master_seed, static_cast<std::uint64_t>(index));
  report.params = params;
  report.successes = summary.successes;
  report.failures = summary.failures;
  report.timeouts = summary.timeouts;
  report.episodes = summary.episodes;
  report.success_rate = summary.success_rate;
  report.mean_steps_to_goal = summary.mean_steps_to_goal;
  return report;
}

}  // namespace

void BenchmarkSpec::validate() const {
  if (n_environments < 1) throw ValidationError("n_environments", "must be >= 1");
  if (n_eval_episodes < 1) throw ValidationError("n_eval_episodes", "must be >= 1");
  if (n_train_episodes < 1) throw ValidationError("n_train_episodes", "must be >= 1");
  param_ranges.validate();
  goal.validate();
  robot.validate();
  agent.validate();
  reward.validate();
}

EvalSummary evaluate(rl::Env& env, rl::QTable& q, const rl::AgentParams& agent,
                     const rl::RewardParams& reward, long n_episodes, Rng& rng,
                     bool record_traces) {
  EvalSummary summary;
  summary.episodes = n_episodes;
  long goal_steps = 0;
  for (long ep = 0; ep < n_episodes; ++ep) {
    rl::EpisodeResult result = rl::run_episode(env, q, agent, reward, rl::Mode::Eval,
                                               agent.eval_epsilon, rng, record_traces);
    switch (result.outcome) {
      case rl::Outcome::Goal:
        ++summary.successes;
        goal_steps += result.steps;
        break;
      case rl::Outcome::Fail:
        ++summary.failures;
        break;
      case rl::Outcome::Timeout:
        ++summary.timeouts;
        break;
    }
    summary.results.push_back(std::move(result));
  }
  summary.success_rate =
      static_cast<double>(summary.successes) / static_cast<double>(n_episodes);
  if (summary.successes > 0) {
    summary.mean_steps_to_goal =
        static_cast<double>(goal_steps) / static_cast<double>(summary.successes);
  }
  return summary;
}

SuccessReport run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();

  SuccessReport report;
  report.master_seed = spec.master_seed;
  report.environments.resize(spec.n_environments);

  if (spec.parallel && spec.n_environments > 1) {
    std::vector<std::future<EnvReport>> futures;
    futures.reserve(spec.n_environments);
    for (int i = 0; i < spec.n_environments; ++i) {
      futures.push_back(
          std::async(std::launch::async, [&spec, i] { return run_environment(spec, i); }));
    }
    for (int i = 0; i < spec.n_environments; ++i) {
      report.environments[i] = futures[i].get();
    }
  } else {
    for (int i = 0; i < spec.n_environments; ++i) {
      report.environments[i] = run_environment(spec, i);
    }
  }

  for (const EnvReport& env : report.environments) {
    report.total_successes += env.successes;
    report.total_episodes += env.episodes;
  }
  report.aggregate_success_rate = static_cast<double>(report.total_successes) /
                                  static_cast<double>(report.total_episodes);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

nlohmann::json report_to_json(const SuccessReport& report) {
  nlohmann::json envs = nlohmann::json::array();
  for (const EnvReport& env : report.environments) {
    nlohmann::json je = {{"index", env.index},
                         {"seed", env.seed},
                         {"params", geom::to_json(env.params)},
                         {"successes", env.successes},
                         {"failures", env.failures},
                         {"timeouts", env.timeouts},
                         {"episodes", env.episodes},
                         {"success_rate", env.success_rate}};
    je["mean_steps_to_goal"] =
        env.mean_steps_to_goal ? nlohmann::json(*env.mean_steps_to_goal) : nullptr;
    envs.push_back(std::move(je));
  }
  return {{"schema_version", kReportSchemaVersion},
          {"master_seed", report.master_seed},
          {"environments", std::move(envs)},
          {"aggregate",
           {{"successes", report.total_successes},
            {"episodes", report.total_episodes},
            {"success_rate", report.aggregate_success_rate}}}};
}

SuccessReport report_from_json(const nlohmann::json& j) {
  const auto version = j.find("schema_version");
  if (version == j.end() || !version->is_number_integer()) {
    throw SchemaError("report schema_version missing");
  }
  if (version->get<int>() != kReportSchemaVersion) {
    throw SchemaError("unsupported report schema_version " +
                      std::to_string(version->get<int>()));
  }

  try {
    SuccessReport report;
    report.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& je : j.at("environments")) {
      EnvReport env;
      env.index = je.at("index").get<int>();
      env.seed = je.at("seed").get<std::uint64_t>();
      env.params = geom::params_from_json(je.at("params"));
      env.successes = je.at("successes").get<long>();
      env.failures = je.at("failures").get<long>();
      env.timeouts = je.at("timeouts").get<long>();
      env.episodes = je.at("episodes").get<long>();
      env.success_rate = je.at("success_rate").get<double>();
      if (!je.at("mean_steps_to_goal").is_null()) {
        env.mean_steps_to_goal = je.at("mean_steps_to_goal").get<double>();
      }
      report.environments.push_back(std::move(env));
    }
    const auto& agg = j.at("aggregate");
    report.total_successes = agg.at("successes").get<long>();
    report.total_episodes = agg.at("episodes").get<long>();
    report.aggregate_success_rate = agg.at("success_rate").get<double>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  }
}

void persist_report(const SuccessReport& report, const std::filesystem::path& path) {
  atomic_write_file(path, report_to_json(report).dump(2) + "\n");
}

SuccessReport load_report(const std::filesystem::path& path) {
  return report_from_json(load_json_file(path));
}

void export_trajectory(const std::vector<rl::TraceStep>& trace,
                       const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const rl::TraceStep& step = trace[i];
    nlohmann::json record = {{"step", i},
                             {"action", action_name(step.action)},
                             {"reward", step.reward}};
    if (step.snapshot) {
      nlohmann::json joints = nlohmann::json::array();
      for (const Vec2& p : step.snapshot->joints) {
        joints.push_back({p.x, p.y});
      }
      record["joints"] = std::move(joints);
      record["tip_command"] = step.snapshot->tip_command;
      record["energy"] = step.snapshot->energy;
    }
    out << record.dump() << "\n";
  }
  atomic_write_file(path, out.str());
}

void write_curve_csv(const std::vector<rl::EpisodeResult>& curve,
                     const std::filesystem::path& path) {
  std::ostringstream out;
  out << "episode,outcome,steps,return\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", curve[i].return_value);
    out << i << "," << rl::outcome_name(curve[i].outcome) << "," << curve[i].steps << ","
        << buf << "\n";
  }
  atomic_write_file(path, out.str());
}

}  // namespace lumen::bench
