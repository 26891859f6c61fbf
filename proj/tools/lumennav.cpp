#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "lumen/config.hpp"
#include "lumen/errors.hpp"
#include "lumen/experiments.hpp"
#include "lumen/json_util.hpp"
#include "lumen/lumen_env.hpp"
#include "lumen/render.hpp"

namespace {

using namespace lumen;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void print_params(const geom::BifurcationParams& p) {
  std::printf("  diameter                %.6g\n", p.diameter);
  std::printf("  main curvature          %.6g\n", p.main_curvature);
  std::printf("  distance to bifurcation %.6g\n", p.distance_to_bifurcation);
  std::printf("  branch curvature        %.6g\n", p.branch_curvature);
  std::printf("  bifurcation angle       %.6g\n", p.bifurcation_angle);
  std::printf("  main length after       %.6g\n", p.main_length_after);
  std::printf("  branch length           %.6g\n", p.branch_length);
}

RunConfig load_or_default(const std::string& config_path) {
  if (config_path.empty()) return default_config();
  return load_config(config_path);
}

geom::LumenMap load_map(const std::string& path) {
  return geom::lumen_map_from_json(load_json_file(path));
}

std::vector<rl::TraceStep> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path);
  std::vector<rl::TraceStep> trace;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      rl::TraceStep step;
      step.action = action_from_name(j.at("action").get<std::string>());
      step.reward = j.at("reward").get<double>();
      if (j.contains("joints")) {
        rl::StepSnapshot snap;
        for (const auto& pt : j.at("joints")) {
          snap.joints.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
        }
        snap.tip_command = j.value("tip_command", 0.0);
        snap.energy = j.value("energy", 0.0);
        step.snapshot = std::move(snap);
      }
      trace.push_back(std::move(step));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trace;
}

int cmd_generate_env(const std::string& config_path, std::uint64_t seed, bool seed_given,
                     const std::string& out_path) {
  RunConfig config = load_or_default(config_path);
  if (!seed_given) {
    seed = entropy_seed();
    std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));
  }
  Rng rng(seed);
  const geom::BifurcationParams params =
      geom::sample_params(config.benchmark.param_ranges, rng);
  const geom::LumenMap map = geom::generate_bifurcation(params, config.benchmark.goal);
  atomic_write_file(out_path, geom::to_json(map).dump(2) + "\n");
  std::printf("environment written to %s\n", out_path.c_str());
  print_params(params);
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& env_path,
              std::uint64_t seed, bool seed_given, long episodes, bool episodes_given,
              const std::string& out_qtable, const std::string& out_curve) {
  RunConfig config = load_or_default(config_path);
  const geom::LumenMap map = load_map(env_path);
  if (!episodes_given) episodes = config.benchmark.n_train_episodes;
  if (episodes < 1) throw ValidationError("episodes", "must be >= 1");
  if (!seed_given) {
    seed = entropy_seed();
    std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));
  }

  rl::LumenEnv env(map, config.benchmark.robot, config.benchmark.agent,
                   config.benchmark.reward);
  Rng rng(seed);
  rl::TrainResult result =
      rl::train(env, config.benchmark.agent, config.benchmark.reward, episodes, rng);

  long tail_goals = 0;
  const long tail = std::min<long>(100, episodes);
  for (long i = episodes - tail; i < episodes; ++i) {
    if (result.curve[static_cast<std::size_t>(i)].outcome == rl::Outcome::Goal) ++tail_goals;
  }
  std::printf("trained %ld episodes, %zu states visited\n", episodes, result.table.size());
  std::printf("success rate over last %ld training episodes: %.3f\n", tail,
              static_cast<double>(tail_goals) / static_cast<double>(tail));

  atomic_write_file(out_qtable, result.table.to_json().dump(2) + "\n");
  std::printf("q-table written to %s\n", out_qtable.c_str());
  if (!out_curve.empty()) {
    bench::write_curve_csv(result.curve, out_curve);
    std::printf("training curve written to %s\n", out_curve.c_str());
  }
  return kExitOk;
}

int cmd_eval(const std::string& config_path, const std::string& env_path,
             const std::string& qtable_path, std::uint64_t seed, bool seed_given,
             long episodes, bool episodes_given, const std::string& traces_dir) {
  RunConfig config = load_or_default(config_path);
  const geom::LumenMap map = load_map(env_path);
  rl::QTable q = rl::QTable::from_json(load_json_file(qtable_path));
  if (!episodes_given) episodes = config.benchmark.n_eval_episodes;
  if (episodes < 1) throw ValidationError("episodes", "must be >= 1");
  if (!seed_given) {
    seed = entropy_seed();
    std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));
  }

  rl::LumenEnv env(map, config.benchmark.robot, config.benchmark.agent,
                   config.benchmark.reward);
  Rng rng(seed);
  const bool record = !traces_dir.empty();
  bench::EvalSummary summary = bench::evaluate(env, q, config.benchmark.agent,
                                               config.benchmark.reward, episodes, rng, record);

  std::printf("episodes: %ld  goal: %ld  fail: %ld  timeout: %ld\n", summary.episodes,
              summary.successes, summary.failures, summary.timeouts);
  std::printf("success rate: %.3f\n", summary.success_rate);
  if (summary.mean_steps_to_goal) {
    std::printf("mean steps to goal: %.2f\n", *summary.mean_steps_to_goal);
  }

  if (record) {
    std::filesystem::create_directories(traces_dir);
    for (std::size_t i = 0; i < summary.results.size(); ++i) {
      char name[40];
      std::snprintf(name, sizeof(name), "episode_%04zu.jsonl", i);
      bench::export_trajectory(*summary.results[i].trajectory,
                               std::filesystem::path(traces_dir) / name);
    }
    std::printf("%zu traces written to %s\n", summary.results.size(), traces_dir.c_str());
  }
  return kExitOk;
}

int cmd_benchmark(const std::string& config_path, std::uint64_t seed, bool seed_given,
                  int envs, long train_episodes, long eval_episodes, bool serial,
                  const std::string& out_report) {
  RunConfig config = load_or_default(config_path);
  bench::BenchmarkSpec spec = config.benchmark;
  if (seed_given) spec.master_seed = seed;
  if (envs > 0) spec.n_environments = envs;
  if (train_episodes > 0) spec.n_train_episodes = train_episodes;
  if (eval_episodes > 0) spec.n_eval_episodes = eval_episodes;
  if (serial) spec.parallel = false;

  std::printf("benchmark: %d environments, %ld train episodes, %ld eval episodes, seed %llu\n",
              spec.n_environments, spec.n_train_episodes, spec.n_eval_episodes,
              static_cast<unsigned long long>(spec.master_seed));
  const bench::SuccessReport report = bench::run_benchmark(spec);

  for (const bench::EnvReport& env : report.environments) {
    std::printf("env %d: success %.3f (%ld/%ld)  fail %ld  timeout %ld\n", env.index,
                env.success_rate, env.successes, env.episodes, env.failures, env.timeouts);
    print_params(env.params);
  }
  std::printf("aggregate success rate: %.3f (%ld/%ld)\n", report.aggregate_success_rate,
              report.total_successes, report.total_episodes);
  std::printf("wall clock: %.1f s\n", report.wall_clock_seconds);

  bench::persist_report(report, out_report);
  std::printf("report written to %s\n", out_report.c_str());
  return kExitOk;
}

int cmd_render(const std::string& env_path, const std::string& trace_path,
               const std::string& out_dir, int every, double scale) {
  const geom::LumenMap map = load_map(env_path);
  const std::vector<rl::TraceStep> trace = load_trace(trace_path);
  if (trace.empty()) throw ValidationError("trace", "no steps to render");
  if (every <= 0) every = std::max<int>(1, static_cast<int>(trace.size() / 20));

  render::RenderOptions opts;
  opts.scale = scale;
  const int written = render_trajectory(map, trace, out_dir, every, opts);
  std::printf("%d frames written to %s\n", written, out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D endoluminal navigation: simulator, Q-learning and benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (defaults used when omitted)")
      ->check(CLI::ExistingFile);

  std::uint64_t seed = 0;
  bool seed_given = false;
  const auto mark_seed = [&](const std::string&) { seed_given = true; };

  auto* gen = app.add_subcommand("generate-env", "Sample a bifurcating lumen and save it");
  std::string gen_out = "environment.json";
  gen->add_option("--seed", seed, "RNG seed (random when omitted)")->each(mark_seed);
  gen->add_option("-o,--out", gen_out, "Output environment JSON path");

  auto* tr = app.add_subcommand("train", "Train a Q-learning agent on an environment");
  std::string tr_env, tr_qtable = "qtable.json", tr_curve;
  long tr_episodes = 0;
  tr->add_option("--env", tr_env, "Environment JSON path")->required()
      ->check(CLI::ExistingFile);
  tr->add_option("--seed", seed, "RNG seed (random when omitted)")->each(mark_seed);
  auto* tr_ep_opt =
      tr->add_option("--episodes", tr_episodes, "Training episodes (config default when omitted)");
  tr->add_option("-o,--out-qtable", tr_qtable, "Output Q-table JSON path");
  tr->add_option("--out-curve", tr_curve, "Optional training-curve CSV path");

  auto* ev = app.add_subcommand("eval", "Evaluate a saved Q-table on an environment");
  std::string ev_env, ev_qtable, ev_traces_dir;
  long ev_episodes = 0;
  ev->add_option("--env", ev_env, "Environment JSON path")->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--qtable", ev_qtable, "Q-table JSON path")->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--seed", seed, "RNG seed (random when omitted)")->each(mark_seed);
  auto* ev_ep_opt =
      ev->add_option("--episodes", ev_episodes, "Evaluation episodes (config default when omitted)");
  ev->add_option("--traces-dir", ev_traces_dir, "Directory for per-episode trace JSONL files");

  auto* bm = app.add_subcommand("benchmark", "Train and evaluate across sampled environments");
  std::string bm_out = "benchmark_report.json";
  int bm_envs = 0;
  long bm_train = 0, bm_eval = 0;
  bool bm_serial = false;
  bm->add_option("--seed", seed, "Master seed (preset when omitted)")->each(mark_seed);
  bm->add_option("--envs", bm_envs, "Number of environments");
  bm->add_option("--train-episodes", bm_train, "Training episodes per environment");
  bm->add_option("--eval-episodes", bm_eval, "Evaluation episodes per environment");
  bm->add_flag("--serial", bm_serial, "Run environments one at a time");
  bm->add_option("-o,--out-report", bm_out, "Output report JSON path");

  auto* rd = app.add_subcommand("render", "Render a trajectory trace to SVG frames");
  std::string rd_env, rd_trace, rd_dir = "frames";
  int rd_every = 0;
  double rd_scale = 40.0;
  rd->add_option("--env", rd_env, "Environment JSON path")->required()
      ->check(CLI::ExistingFile);
  rd->add_option("--trace", rd_trace, "Trace JSONL path")->required()
      ->check(CLI::ExistingFile);
  rd->add_option("-o,--out-dir", rd_dir, "Output directory for frames");
  rd->add_option("--every", rd_every, "Render every k-th step (default: ~20 frames)");
  rd->add_option("--scale", rd_scale, "Pixels per world unit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (gen->parsed()) return cmd_generate_env(config_path, seed, seed_given, gen_out);
    if (tr->parsed()) {
      return cmd_train(config_path, tr_env, seed, seed_given, tr_episodes,
                       tr_ep_opt->count() > 0, tr_qtable, tr_curve);
    }
    if (ev->parsed()) {
      return cmd_eval(config_path, ev_env, ev_qtable, seed, seed_given, ev_episodes,
                      ev_ep_opt->count() > 0, ev_traces_dir);
    }
    if (bm->parsed()) {
      return cmd_benchmark(config_path, seed, seed_given, bm_envs, bm_train, bm_eval,
                           bm_serial, bm_out);
    }
    if (rd->parsed()) return cmd_render(rd_env, rd_trace, rd_dir, rd_every, rd_scale);
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s: %s\n", e.field().c_str(),
                 e.message().c_str());
    return kExitValidation;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitOk;
}
