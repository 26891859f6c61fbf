#include "lumen/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "lumen/errors.hpp"

namespace lumen::rl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ValidationError(field, message);
}

}  // namespace

void AgentParams::validate() const {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0, "alpha",
          "must lie in (0, 1]");
  require(std::isfinite(gamma) && gamma >= 0.0 && gamma < 1.0, "gamma",
          "must lie in [0, 1)");
  require(std::isfinite(explore_epsilon_start) && explore_epsilon_start >= 0.0 &&
              explore_epsilon_start <= 1.0,
          "explore_epsilon_start", "must lie in [0, 1]");
  require(std::isfinite(explore_epsilon_end) && explore_epsilon_end >= 0.0 &&
              explore_epsilon_end <= 1.0,
          "explore_epsilon_end", "must lie in [0, 1]");
  if (epsilon_decay_episodes) {
    require(*epsilon_decay_episodes >= 1, "epsilon_decay_episodes", "must be >= 1");
  }
  require(std::isfinite(eval_epsilon) && eval_epsilon >= 0.0 && eval_epsilon <= 1.0,
          "eval_epsilon", "must lie in [0, 1]");
  require(max_steps_per_episode >= 1, "max_steps_per_episode", "must be >= 1");
  require(std::isfinite(cell_size) && cell_size > 0.0, "cell_size", "must be > 0");
  require(n_heading_bins >= 1, "n_heading_bins", "must be >= 1");
}

void RewardParams::validate() const {
  require(std::isfinite(r_goal) && r_goal > 0.0, "r_goal", "must be > 0");
  require(std::isfinite(r_step) && r_step <= 0.0, "r_step", "must be <= 0");
  require(std::isfinite(r_fail) && r_fail <= 0.0, "r_fail", "must be <= 0");
  if (fail_penetration) {
    require(std::isfinite(*fail_penetration) && *fail_penetration > 0.0,
            "fail_penetration", "must be > 0");
  }
}

double QTable::value(const StateId& s, Action a) const {
  const auto it = table_.find(s);
  return it == table_.end() ? 0.0 : it->second[static_cast<int>(a)];
}

QTable::Row QTable::row(const StateId& s) const {
  const auto it = table_.find(s);
  return it == table_.end() ? Row{0.0, 0.0, 0.0} : it->second;
}

double QTable::max_value(const StateId& s) const {
  if (s.is_terminal()) return 0.0;
  const Row r = row(s);
  return *std::max_element(r.begin(), r.end());
}

Action QTable::greedy_action(const StateId& s) const {
  const Row r = row(s);
  int best = 0;
  for (int i = 1; i < kActionCount; ++i) {
    if (r[i] > r[best]) best = i;
  }
  return static_cast<Action>(best);
}

void QTable::set(const StateId& s, Action a, double value) {
  if (s.is_terminal()) return;  // terminal states stay at zero
  table_[s][static_cast<int>(a)] = value;
}

nlohmann::json QTable::to_json() const {
  // Sorted entries so equal tables serialize to identical bytes.
  std::vector<const std::pair<const StateId, Row>*> entries;
  entries.reserve(table_.size());
  for (const auto& kv : table_) entries.push_back(&kv);
  std::sort(entries.begin(), entries.end(), [](const auto* a, const auto* b) {
    const StateId& sa = a->first;
    const StateId& sb = b->first;
    return std::tie(sa.cell_x, sa.cell_y, sa.heading_bin) <
           std::tie(sb.cell_x, sb.cell_y, sb.heading_bin);
  });

  nlohmann::json rows = nlohmann::json::array();
  for (const auto* kv : entries) {
    rows.push_back({{"state", {kv->first.cell_x, kv->first.cell_y, kv->first.heading_bin}},
                    {"values", kv->second}});
  }
  return {{"schema_version", 1}, {"entries", std::move(rows)}};
}

QTable QTable::from_json(const nlohmann::json& j) {
  const auto version = j.find("schema_version");
  if (version == j.end() || version->get<int>() != 1) {
    throw SchemaError("unsupported q-table schema_version");
  }
  const auto entries = j.find("entries");
  if (entries == j.end() || !entries->is_array()) {
    throw SchemaError("q-table entries missing");
  }

  QTable q;
  for (const auto& row : *entries) {
    const auto& state = row.at("state");
    const auto& values = row.at("values");
    if (state.size() != 3 || values.size() != kActionCount) {
      throw SchemaError("malformed q-table entry");
    }
    StateId s{state[0].get<std::int32_t>(), state[1].get<std::int32_t>(),
              state[2].get<std::int32_t>(), Terminal::None};
    Row r;
    for (int i = 0; i < kActionCount; ++i) r[i] = values[i].get<double>();
    q.table_[s] = r;
  }
  return q;
}

StateId discretize(Vec2 tip_position, double tip_heading, const AgentParams& params,
                   const geom::LumenMap& lumen, bool fail_flag) {
  StateId s;
  s.cell_x = static_cast<std::int32_t>(std::floor(tip_position.x / params.cell_size));
  s.cell_y = static_cast<std::int32_t>(std::floor(tip_position.y / params.cell_size));

  double wrapped = std::fmod(tip_heading, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  int bin = static_cast<int>(std::floor(wrapped / kTwoPi * params.n_heading_bins));
  s.heading_bin = std::min(bin, params.n_heading_bins - 1);

  if (geom::in_goal(lumen, tip_position)) {
    s.tag = Terminal::Goal;
  } else if (fail_flag) {
    s.tag = Terminal::Fail;
  }
  return s;
}

double q_update(QTable& q, const StateId& s, Action a, double r, const StateId& s_next,
                double alpha, double gamma) {
  const double old_value = q.value(s, a);
  const double next_best = s_next.is_terminal() ? 0.0 : q.max_value(s_next);
  const double updated = old_value + alpha * (r + gamma * next_best - old_value);
  q.set(s, a, updated);
  return updated;
}

Action select_action(const QTable& q, const StateId& s, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && uniform_unit(rng) < epsilon) {
    return static_cast<Action>(uniform_index(rng, kActionCount));
  }
  return q.greedy_action(s);
}

double compute_reward(const StateId& /*prev*/, Action /*action*/, const StateId& next,
                      const RewardParams& params) {
  switch (next.tag) {
    case Terminal::Goal:
      return params.r_goal;
    case Terminal::Fail:
      return params.r_fail;
    case Terminal::None:
      break;
  }
  return params.r_step;
}

EpisodeResult run_episode(Env& env, QTable& q, const AgentParams& agent,
                          const RewardParams& reward, Mode mode, double epsilon, Rng& rng,
                          bool record_trace) {
  EpisodeResult result;
  if (record_trace) result.trajectory.emplace();

  StateId state = env.reset();
  if (state.is_terminal()) {
    result.outcome = state.tag == Terminal::Goal ? Outcome::Goal : Outcome::Fail;
    return result;
  }

  double discount = 1.0;
  for (long t = 1; t <= agent.max_steps_per_episode; ++t) {
    const Action action = select_action(q, state, epsilon, rng);
    const StateId next = env.step(action);
    const double r = compute_reward(state, action, next, reward);
    if (mode == Mode::Train) {
      q_update(q, state, action, r, next, agent.alpha, agent.gamma);
    }

    result.return_value += discount * r;
    discount *= agent.gamma;
    result.steps = t;
    if (record_trace) {
      result.trajectory->push_back({action, r, env.snapshot()});
    }

    if (next.is_terminal()) {
      result.outcome = next.tag == Terminal::Goal ? Outcome::Goal : Outcome::Fail;
      return result;
    }
    state = next;
  }

  result.outcome = Outcome::Timeout;
  return result;
}

double decayed_epsilon(const AgentParams& agent, long episode, long n_episodes) {
  const long decay_span = agent.epsilon_decay_episodes.value_or(
      std::max<long>(1, static_cast<long>(0.8 * static_cast<double>(n_episodes))));
  const double progress =
      std::min(1.0, static_cast<double>(episode) / static_cast<double>(decay_span));
  return agent.explore_epsilon_start +
         progress * (agent.explore_epsilon_end - agent.explore_epsilon_start);
}

TrainResult train(Env& env, const AgentParams& agent, const RewardParams& reward,
                  long n_episodes, Rng& rng) {
  if (n_episodes < 1) throw ValidationError("n_episodes", "must be >= 1");
  agent.validate();
  reward.validate();

  TrainResult result;
  result.curve.reserve(n_episodes);
  for (long ep = 0; ep < n_episodes; ++ep) {
    const double epsilon = decayed_epsilon(agent, ep, n_episodes);
    result.curve.push_back(
        run_episode(env, result.table, agent, reward, Mode::Train, epsilon, rng));
  }
  return result;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Goal:
      return "goal";
    case Outcome::Fail:
      return "fail";
    case Outcome::Timeout:
      return "timeout";
  }
  return "timeout";
}

}  // namespace lumen::rl
