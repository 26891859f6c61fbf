#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lumen/errors.hpp"
#include "lumen/experiments.hpp"
#include "lumen/json_util.hpp"
#include "lumen/lumen_env.hpp"
#include "oracles.hpp"

using namespace lumen;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "lumen_experiments_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// A benchmark spec small enough for unit tests: one fixed, wide, straight
// lumen (degenerate sampling intervals) and a short training run.
bench::BenchmarkSpec tiny_spec() {
  bench::BenchmarkSpec spec;
  spec.n_environments = 1;
  spec.n_train_episodes = 300;
  spec.n_eval_episodes = 8;
  spec.param_ranges.diameter = {0.75, 0.75};
  spec.param_ranges.main_curvature = {0.0, 0.0};
  spec.param_ranges.distance_to_bifurcation = {2.0, 2.0};
  spec.param_ranges.branch_curvature = {0.0, 0.0};
  spec.param_ranges.bifurcation_angle = {0.7, 0.7};
  spec.param_ranges.main_length_after = geom::Interval{3.0, 3.0};
  spec.param_ranges.branch_length = geom::Interval{3.0, 3.0};
  spec.goal = {geom::GoalBranch::Main, 0.2, std::nullopt};
  spec.agent.max_steps_per_episode = 80;
  return spec;
}

bench::SuccessReport sample_report() {
  bench::SuccessReport report;
  report.master_seed = 424242;
  bench::EnvReport a;
  a.index = 0;
  a.seed = child_seed(424242, 0);
  a.params.diameter = 0.6;
  a.params.main_curvature = -0.05;
  a.successes = 48;
  a.failures = 1;
  a.timeouts = 1;
  a.episodes = 50;
  a.success_rate = 0.96;
  a.mean_steps_to_goal = 31.25;
  bench::EnvReport b;
  b.index = 1;
  b.seed = child_seed(424242, 1);
  b.successes = 0;
  b.failures = 0;
  b.timeouts = 50;
  b.episodes = 50;
  b.success_rate = 0.0;
  b.mean_steps_to_goal = std::nullopt;  // no successful episode
  report.environments = {a, b};
  report.total_successes = 48;
  report.total_episodes = 100;
  report.aggregate_success_rate = 0.48;
  return report;
}

}  // namespace

TEST_CASE("success report round-trips through json") {
  const auto report = sample_report();
  const nlohmann::json j = bench::report_to_json(report);
  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("environments").size() == 2);
  CHECK(j.at("environments")[1].at("mean_steps_to_goal").is_null());

  const auto restored = bench::report_from_json(j);
  CHECK(restored == report);
  CHECK(bench::report_to_json(restored).dump() == j.dump());
}

TEST_CASE("success report persists and loads from disk") {
  const auto report = sample_report();
  const auto path = temp_file("report_roundtrip.json");
  bench::persist_report(report, path);
  CHECK(bench::load_report(path) == report);
  fs::remove(path);
}

TEST_CASE("report loading rejects damaged files") {
  const auto path = temp_file("report_bad.json");

  SUBCASE("truncated json") {
    std::ofstream(path) << R"({"schema_version": 1, "master_seed")";
    CHECK_THROWS_AS(bench::load_report(path), SchemaError);
  }
  SUBCASE("missing schema version") {
    std::ofstream(path) << R"({"master_seed": 1})";
    CHECK_THROWS_AS(bench::load_report(path), SchemaError);
  }
  SUBCASE("unsupported schema version") {
    std::ofstream(path) << R"({"schema_version": 99})";
    CHECK_THROWS_AS(bench::load_report(path), SchemaError);
  }
  SUBCASE("missing aggregate section") {
    nlohmann::json j = bench::report_to_json(sample_report());
    j.erase("aggregate");
    std::ofstream(path) << j.dump();
    CHECK_THROWS_AS(bench::load_report(path), SchemaError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(bench::load_report(temp_file("does_not_exist.json")), IoError);
  }
  fs::remove(path);
}

TEST_CASE("benchmark spec validation names the offending field") {
  bench::BenchmarkSpec spec = tiny_spec();
  spec.n_environments = 0;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("n_environments"),
                       ValidationError);

  spec = tiny_spec();
  spec.n_eval_episodes = 0;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("n_eval_episodes"),
                       ValidationError);

  spec = tiny_spec();
  spec.agent.alpha = 2.0;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("alpha"), ValidationError);

  spec = tiny_spec();
  spec.robot.relax_cadence = 0;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("relax_cadence"),
                       ValidationError);

  CHECK_THROWS_AS(bench::run_benchmark([] {
                    auto s = tiny_spec();
                    s.n_train_episodes = 0;
                    return s;
                  }()),
                  ValidationError);
}

TEST_CASE("benchmark on a trivial straight lumen succeeds and reproduces") {
  const auto spec = tiny_spec();
  const auto report = bench::run_benchmark(spec);

  REQUIRE(report.environments.size() == 1);
  CHECK(report.master_seed == spec.master_seed);
  CHECK(report.environments[0].seed == child_seed(spec.master_seed, 0));
  CHECK(report.environments[0].params.diameter == 0.75);  // degenerate interval
  CHECK(report.total_episodes == 8);
  CHECK(report.aggregate_success_rate == 1.0);  // goal dead ahead of the entry
  CHECK(report.environments[0].mean_steps_to_goal.has_value());
  CHECK(report.wall_clock_seconds > 0.0);

  // Same spec, same bytes (the wall clock stays out of the serialization).
  const auto again = bench::run_benchmark(spec);
  CHECK(again == report);
  CHECK(bench::report_to_json(again).dump() == bench::report_to_json(report).dump());
}

TEST_CASE("parallel and serial benchmark runs produce identical reports") {
  auto spec = tiny_spec();
  spec.n_environments = 2;
  spec.n_train_episodes = 60;
  spec.n_eval_episodes = 3;

  spec.parallel = true;
  const auto parallel = bench::run_benchmark(spec);
  spec.parallel = false;
  const auto serial = bench::run_benchmark(spec);
  CHECK(parallel == serial);
}

TEST_CASE("environment reports depend only on the master seed and index") {
  auto one = tiny_spec();
  one.n_train_episodes = 60;
  one.n_eval_episodes = 3;
  auto two = one;
  two.n_environments = 2;

  const auto first = bench::run_benchmark(one);
  const auto both = bench::run_benchmark(two);
  CHECK(both.environments[0] == first.environments[0]);
  CHECK(both.environments[1].seed != both.environments[0].seed);
}

TEST_CASE("evaluate tallies outcomes and mean steps") {
  test::GridMdp env;
  rl::AgentParams agent;
  agent.eval_epsilon = 0.0;
  rl::RewardParams reward;
  Rng rng(5);

  SUBCASE("hopeless table times out every episode") {
    rl::QTable q;  // greedy dead-ends against the +x wall
    agent.max_steps_per_episode = 10;
    const auto summary = bench::evaluate(env, q, agent, reward, 6, rng);
    CHECK(summary.episodes == 6);
    CHECK(summary.timeouts == 6);
    CHECK(summary.successes == 0);
    CHECK(summary.failures == 0);
    CHECK(summary.success_rate == 0.0);
    CHECK(!summary.mean_steps_to_goal.has_value());
    CHECK(summary.results.size() == 6);
  }

  SUBCASE("preloaded policy reaches the goal from every start") {
    rl::QTable q;
    for (int x = 0; x < 4; ++x) {
      for (int y = 0; y < 5; ++y) {
        q.set(test::GridMdp::state_id(x, y), Action::BendCw, 10.0);
      }
    }
    for (int y = 0; y < 4; ++y) q.set(test::GridMdp::state_id(4, y), Action::BendCcw, 10.0);
    const auto summary = bench::evaluate(env, q, agent, reward, 5, rng);
    CHECK(summary.successes == 5);
    CHECK(summary.success_rate == 1.0);
    REQUIRE(summary.mean_steps_to_goal.has_value());
    // Starts cycle (0,0), (1,0), (2,0), (3,0), (4,0): 8 + 7 + 6 + 5 + 4 steps.
    CHECK(*summary.mean_steps_to_goal == 6.0);
  }
}

TEST_CASE("trajectory export writes one json line per step") {
  std::vector<rl::TraceStep> trace;
  rl::TraceStep with_snapshot;
  with_snapshot.action = Action::Advance;
  with_snapshot.reward = -0.01;
  with_snapshot.snapshot = rl::StepSnapshot{{{0.0, 0.0}, {0.5, 0.0}, {1.0, 0.25}},
                                            0.1,
                                            3.25};
  rl::TraceStep bare;
  bare.action = Action::BendCcw;
  bare.reward = 1.0;
  trace = {with_snapshot, bare};

  const auto path = temp_file("trace.jsonl");
  bench::export_trajectory(trace, path);

  std::ifstream in(path);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  REQUIRE(rows.size() == 2);

  CHECK(rows[0].at("step").get<int>() == 0);
  CHECK(rows[0].at("action").get<std::string>() == "advance");
  CHECK(rows[0].at("reward").get<double>() == -0.01);
  CHECK(rows[0].at("tip_command").get<double>() == 0.1);
  CHECK(rows[0].at("energy").get<double>() == 3.25);
  REQUIRE(rows[0].at("joints").size() == 3);
  CHECK(rows[0].at("joints")[2][1].get<double>() == 0.25);

  CHECK(rows[1].at("step").get<int>() == 1);
  CHECK(rows[1].at("action").get<std::string>() == "bend_ccw");
  CHECK(!rows[1].contains("joints"));
  fs::remove(path);
}

TEST_CASE("exported lumen env trajectories carry exact energies") {
  const auto spec = tiny_spec();
  Rng sample_rng(splitmix64(child_seed(spec.master_seed, 0) + 1));
  const auto params = geom::sample_params(spec.param_ranges, sample_rng);
  const auto map = geom::generate_bifurcation(params, spec.goal);
  rl::LumenEnv env(map, spec.robot, spec.agent, spec.reward);

  rl::QTable q;
  Rng rng(21);
  const auto result =
      rl::run_episode(env, q, spec.agent, spec.reward, rl::Mode::Eval, 1.0, rng, true);
  REQUIRE(result.trajectory.has_value());
  REQUIRE(!result.trajectory->empty());

  const auto path = temp_file("env_trace.jsonl");
  bench::export_trajectory(*result.trajectory, path);

  std::ifstream in(path);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto record = nlohmann::json::parse(line);
    const auto& step = (*result.trajectory)[row];
    REQUIRE(step.snapshot.has_value());
    // Doubles survive the dump/parse loop bit-exactly.
    CHECK(record.at("energy").get<double>() == step.snapshot->energy);
    CHECK(record.at("joints").size() == step.snapshot->joints.size());
    ++row;
  }
  CHECK(row == result.trajectory->size());
  fs::remove(path);
}

TEST_CASE("curve csv has a header and one formatted row per episode") {
  std::vector<rl::EpisodeResult> curve(3);
  curve[0] = {rl::Outcome::Goal, 12, 0.5823149234, std::nullopt};
  curve[1] = {rl::Outcome::Fail, 3, -1.0 / 3.0, std::nullopt};
  curve[2] = {rl::Outcome::Timeout, 400, -0.00999999999999, std::nullopt};

  const auto path = temp_file("curve.csv");
  bench::write_curve_csv(curve, path);

  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);
  CHECK(line == "episode,outcome,steps,return");

  const char* outcomes[] = {"goal", "fail", "timeout"};
  for (int i = 0; i < 3; ++i) {
    REQUIRE(std::getline(in, line));
    char expected[96];
    std::snprintf(expected, sizeof(expected), "%d,%s,%ld,%.17g", i, outcomes[i],
                  curve[i].steps, curve[i].return_value);
    CHECK(line == expected);
    // The %.17g text parses back to the exact stored double.
    CHECK(std::stod(line.substr(line.rfind(',') + 1)) == curve[i].return_value);
  }
  CHECK(!std::getline(in, line));
  fs::remove(path);
}
