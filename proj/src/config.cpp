#include "lumen/config.hpp"

#include <functional>
#include <initializer_list>
#include <string>

#include "lumen/errors.hpp"
#include "lumen/json_util.hpp"

namespace lumen {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  return j;
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ValidationError(join(path, item.key().c_str()), "unknown key");
  }
}

// Applies fn to j[key] when present; missing keys keep the default.
void maybe(const json& j, const std::string& path, const char* key,
           const std::function<void(const json&, const std::string&)>& fn) {
  const auto it = j.find(key);
  if (it != j.end()) fn(*it, join(path, key));
}

void read_double(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) throw ValidationError(path, "expected a number");
  out = j.get<double>();
}

void read_int(const json& j, const std::string& path, int& out) {
  if (!j.is_number_integer()) throw ValidationError(path, "expected an integer");
  out = j.get<int>();
}

void read_long(const json& j, const std::string& path, long& out) {
  if (!j.is_number_integer()) throw ValidationError(path, "expected an integer");
  out = j.get<long>();
}

void read_u64(const json& j, const std::string& path, std::uint64_t& out) {
  if (!j.is_number_unsigned() && !j.is_number_integer()) {
    throw ValidationError(path, "expected an integer");
  }
  if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0) {
    throw ValidationError(path, "expected a non-negative integer");
  }
  out = j.get<std::uint64_t>();
}

void read_bool(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) throw ValidationError(path, "expected a boolean");
  out = j.get<bool>();
}

void read_interval(const json& j, const std::string& path, geom::Interval& out) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ValidationError(path, "expected [lo, hi]");
  }
  out = {j[0].get<double>(), j[1].get<double>()};
}

void read_opt_interval(const json& j, const std::string& path,
                       std::optional<geom::Interval>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  geom::Interval iv;
  read_interval(j, path, iv);
  out = iv;
}

void read_opt_double(const json& j, const std::string& path, std::optional<double>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  double v = 0.0;
  read_double(j, path, v);
  out = v;
}

void read_opt_long(const json& j, const std::string& path, std::optional<long>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  long v = 0;
  read_long(j, path, v);
  out = v;
}

void parse_ranges(const json& j, const std::string& path, geom::ParamRanges& r) {
  expect_object(j, path);
  reject_unknown(j, path,
                 {"diameter", "main_curvature", "distance_to_bifurcation",
                  "branch_curvature", "bifurcation_angle", "main_length_after",
                  "branch_length"});
  maybe(j, path, "diameter",
        [&](const json& v, const std::string& p) { read_interval(v, p, r.diameter); });
  maybe(j, path, "main_curvature",
        [&](const json& v, const std::string& p) { read_interval(v, p, r.main_curvature); });
  maybe(j, path, "distance_to_bifurcation", [&](const json& v, const std::string& p) {
    read_interval(v, p, r.distance_to_bifurcation);
  });
  maybe(j, path, "branch_curvature", [&](const json& v, const std::string& p) {
    read_interval(v, p, r.branch_curvature);
  });
  maybe(j, path, "bifurcation_angle", [&](const json& v, const std::string& p) {
    read_interval(v, p, r.bifurcation_angle);
  });
  maybe(j, path, "main_length_after", [&](const json& v, const std::string& p) {
    read_opt_interval(v, p, r.main_length_after);
  });
  maybe(j, path, "branch_length", [&](const json& v, const std::string& p) {
    read_opt_interval(v, p, r.branch_length);
  });
}

void parse_goal(const json& j, const std::string& path, geom::GoalSpec& g) {
  expect_object(j, path);
  reject_unknown(j, path, {"branch", "arclength_fraction", "radius"});
  maybe(j, path, "branch", [&](const json& v, const std::string& p) {
    if (v == "main") {
      g.branch = geom::GoalBranch::Main;
    } else if (v == "branch") {
      g.branch = geom::GoalBranch::Branch;
    } else {
      throw ValidationError(p, "expected \"main\" or \"branch\"");
    }
  });
  maybe(j, path, "arclength_fraction",
        [&](const json& v, const std::string& p) { read_double(v, p, g.arclength_fraction); });
  maybe(j, path, "radius",
        [&](const json& v, const std::string& p) { read_opt_double(v, p, g.radius); });
}

void parse_robot(const json& j, const std::string& path, robot::RobotParams& r) {
  expect_object(j, path);
  reject_unknown(j, path,
                 {"k1", "k2", "link_length", "max_links", "bend_step", "tip_limit",
                  "relax_step", "relax_tol", "relax_max_iters", "relax_cadence"});
  maybe(j, path, "k1", [&](const json& v, const std::string& p) { read_double(v, p, r.k1); });
  maybe(j, path, "k2", [&](const json& v, const std::string& p) { read_double(v, p, r.k2); });
  maybe(j, path, "link_length",
        [&](const json& v, const std::string& p) { read_double(v, p, r.link_length); });
  maybe(j, path, "max_links",
        [&](const json& v, const std::string& p) { read_int(v, p, r.max_links); });
  maybe(j, path, "bend_step",
        [&](const json& v, const std::string& p) { read_double(v, p, r.bend_step); });
  maybe(j, path, "tip_limit",
        [&](const json& v, const std::string& p) { read_double(v, p, r.tip_limit); });
  maybe(j, path, "relax_step",
        [&](const json& v, const std::string& p) { read_double(v, p, r.relax_step); });
  maybe(j, path, "relax_tol",
        [&](const json& v, const std::string& p) { read_double(v, p, r.relax_tol); });
  maybe(j, path, "relax_max_iters",
        [&](const json& v, const std::string& p) { read_int(v, p, r.relax_max_iters); });
  maybe(j, path, "relax_cadence",
        [&](const json& v, const std::string& p) { read_int(v, p, r.relax_cadence); });
}

void parse_agent(const json& j, const std::string& path, rl::AgentParams& a) {
  expect_object(j, path);
  reject_unknown(j, path,
                 {"alpha", "gamma", "explore_epsilon_start", "explore_epsilon_end",
                  "epsilon_decay_episodes", "eval_epsilon", "max_steps_per_episode",
                  "cell_size", "n_heading_bins"});
  maybe(j, path, "alpha",
        [&](const json& v, const std::string& p) { read_double(v, p, a.alpha); });
  maybe(j, path, "gamma",
        [&](const json& v, const std::string& p) { read_double(v, p, a.gamma); });
  maybe(j, path, "explore_epsilon_start", [&](const json& v, const std::string& p) {
    read_double(v, p, a.explore_epsilon_start);
  });
  maybe(j, path, "explore_epsilon_end", [&](const json& v, const std::string& p) {
    read_double(v, p, a.explore_epsilon_end);
  });
  maybe(j, path, "epsilon_decay_episodes", [&](const json& v, const std::string& p) {
    read_opt_long(v, p, a.epsilon_decay_episodes);
  });
  maybe(j, path, "eval_epsilon",
        [&](const json& v, const std::string& p) { read_double(v, p, a.eval_epsilon); });
  maybe(j, path, "max_steps_per_episode", [&](const json& v, const std::string& p) {
    read_long(v, p, a.max_steps_per_episode);
  });
  maybe(j, path, "cell_size",
        [&](const json& v, const std::string& p) { read_double(v, p, a.cell_size); });
  maybe(j, path, "n_heading_bins",
        [&](const json& v, const std::string& p) { read_int(v, p, a.n_heading_bins); });
}

void parse_reward(const json& j, const std::string& path, rl::RewardParams& r) {
  expect_object(j, path);
  reject_unknown(j, path, {"r_goal", "r_step", "r_fail", "fail_penetration"});
  maybe(j, path, "r_goal",
        [&](const json& v, const std::string& p) { read_double(v, p, r.r_goal); });
  maybe(j, path, "r_step",
        [&](const json& v, const std::string& p) { read_double(v, p, r.r_step); });
  maybe(j, path, "r_fail",
        [&](const json& v, const std::string& p) { read_double(v, p, r.r_fail); });
  maybe(j, path, "fail_penetration", [&](const json& v, const std::string& p) {
    read_opt_double(v, p, r.fail_penetration);
  });
}

void parse_benchmark(const json& j, const std::string& path, bench::BenchmarkSpec& b) {
  expect_object(j, path);
  reject_unknown(j, path,
                 {"n_environments", "n_eval_episodes", "n_train_episodes", "master_seed",
                  "parallel"});
  maybe(j, path, "n_environments",
        [&](const json& v, const std::string& p) { read_int(v, p, b.n_environments); });
  maybe(j, path, "n_eval_episodes",
        [&](const json& v, const std::string& p) { read_long(v, p, b.n_eval_episodes); });
  maybe(j, path, "n_train_episodes",
        [&](const json& v, const std::string& p) { read_long(v, p, b.n_train_episodes); });
  maybe(j, path, "master_seed",
        [&](const json& v, const std::string& p) { read_u64(v, p, b.master_seed); });
  maybe(j, path, "parallel",
        [&](const json& v, const std::string& p) { read_bool(v, p, b.parallel); });
}

json interval_json(const geom::Interval& iv) { return json::array({iv.lo, iv.hi}); }

template <typename Fn>
void rethrow_prefixed(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const InfeasibleRange& e) {
    throw InfeasibleRange(section + "." + e.field(), e.message());
  } catch (const ValidationError& e) {
    throw ValidationError(section + "." + e.field(), e.message());
  }
}

}  // namespace

void RunConfig::validate() const {
  rethrow_prefixed("lumen.ranges", [&] { benchmark.param_ranges.validate(); });
  rethrow_prefixed("lumen.goal", [&] { benchmark.goal.validate(); });
  rethrow_prefixed("robot", [&] { benchmark.robot.validate(); });
  rethrow_prefixed("agent", [&] { benchmark.agent.validate(); });
  rethrow_prefixed("reward", [&] { benchmark.reward.validate(); });
  rethrow_prefixed("benchmark", [&] {
    if (benchmark.n_environments < 1) throw ValidationError("n_environments", "must be >= 1");
    if (benchmark.n_eval_episodes < 1) throw ValidationError("n_eval_episodes", "must be >= 1");
    if (benchmark.n_train_episodes < 1) {
      throw ValidationError("n_train_episodes", "must be >= 1");
    }
  });
}

RunConfig default_config() { return RunConfig{}; }

nlohmann::json to_json(const RunConfig& config) {
  const bench::BenchmarkSpec& b = config.benchmark;
  json ranges = {{"diameter", interval_json(b.param_ranges.diameter)},
                 {"main_curvature", interval_json(b.param_ranges.main_curvature)},
                 {"distance_to_bifurcation",
                  interval_json(b.param_ranges.distance_to_bifurcation)},
                 {"branch_curvature", interval_json(b.param_ranges.branch_curvature)},
                 {"bifurcation_angle", interval_json(b.param_ranges.bifurcation_angle)}};
  ranges["main_length_after"] = b.param_ranges.main_length_after
                                    ? interval_json(*b.param_ranges.main_length_after)
                                    : json(nullptr);
  ranges["branch_length"] = b.param_ranges.branch_length
                                ? interval_json(*b.param_ranges.branch_length)
                                : json(nullptr);

  json goal = {{"branch", b.goal.branch == geom::GoalBranch::Main ? "main" : "branch"},
               {"arclength_fraction", b.goal.arclength_fraction}};
  goal["radius"] = b.goal.radius ? json(*b.goal.radius) : json(nullptr);

  json agent = {{"alpha", b.agent.alpha},
                {"gamma", b.agent.gamma},
                {"explore_epsilon_start", b.agent.explore_epsilon_start},
                {"explore_epsilon_end", b.agent.explore_epsilon_end},
                {"eval_epsilon", b.agent.eval_epsilon},
                {"max_steps_per_episode", b.agent.max_steps_per_episode},
                {"cell_size", b.agent.cell_size},
                {"n_heading_bins", b.agent.n_heading_bins}};
  agent["epsilon_decay_episodes"] =
      b.agent.epsilon_decay_episodes ? json(*b.agent.epsilon_decay_episodes) : json(nullptr);

  json reward = {{"r_goal", b.reward.r_goal},
                 {"r_step", b.reward.r_step},
                 {"r_fail", b.reward.r_fail}};
  reward["fail_penetration"] =
      b.reward.fail_penetration ? json(*b.reward.fail_penetration) : json(nullptr);

  return {{"lumen", {{"ranges", std::move(ranges)}, {"goal", std::move(goal)}}},
          {"robot",
           {{"k1", b.robot.k1},
            {"k2", b.robot.k2},
            {"link_length", b.robot.link_length},
            {"max_links", b.robot.max_links},
            {"bend_step", b.robot.bend_step},
            {"tip_limit", b.robot.tip_limit},
            {"relax_step", b.robot.relax_step},
            {"relax_tol", b.robot.relax_tol},
            {"relax_max_iters", b.robot.relax_max_iters},
            {"relax_cadence", b.robot.relax_cadence}}},
          {"agent", std::move(agent)},
          {"reward", std::move(reward)},
          {"benchmark",
           {{"n_environments", b.n_environments},
            {"n_eval_episodes", b.n_eval_episodes},
            {"n_train_episodes", b.n_train_episodes},
            {"master_seed", b.master_seed},
            {"parallel", b.parallel}}}};
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig config = default_config();
  expect_object(j, "config");
  reject_unknown(j, "", {"lumen", "robot", "agent", "reward", "benchmark"});

  const auto lumen_it = j.find("lumen");
  if (lumen_it != j.end()) {
    expect_object(*lumen_it, "lumen");
    reject_unknown(*lumen_it, "lumen", {"ranges", "goal"});
    maybe(*lumen_it, "lumen", "ranges", [&](const json& v, const std::string& p) {
      parse_ranges(v, p, config.benchmark.param_ranges);
    });
    maybe(*lumen_it, "lumen", "goal", [&](const json& v, const std::string& p) {
      parse_goal(v, p, config.benchmark.goal);
    });
  }
  maybe(j, "", "robot", [&](const json& v, const std::string& p) {
    parse_robot(v, p, config.benchmark.robot);
  });
  maybe(j, "", "agent", [&](const json& v, const std::string& p) {
    parse_agent(v, p, config.benchmark.agent);
  });
  maybe(j, "", "reward", [&](const json& v, const std::string& p) {
    parse_reward(v, p, config.benchmark.reward);
  });
  maybe(j, "", "benchmark", [&](const json& v, const std::string& p) {
    parse_benchmark(v, p, config.benchmark);
  });
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig config = config_from_json(load_json_file(path));
  config.validate();
  return config;
}

}  // namespace lumen
