#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lumen/action.hpp"
#include "lumen/geometry.hpp"
#include "lumen/rng.hpp"
#include "lumen/vec2.hpp"

namespace lumen::rl {

enum class Terminal : std::uint8_t { None = 0, Goal = 1, Fail = 2 };

// Discretized tip state: grid cell, heading bin, and a terminal tag.
struct StateId {
  std::int32_t cell_x = 0;
  std::int32_t cell_y = 0;
  std::int32_t heading_bin = 0;
  Terminal tag = Terminal::None;

  bool is_terminal() const { return tag != Terminal::None; }
  bool operator==(const StateId&) const = default;
};

struct StateIdHash {
  std::size_t operator()(const StateId& s) const {
    std::uint64_t h = static_cast<std::uint32_t>(s.cell_x);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(s.cell_y);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(s.heading_bin);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(s.tag);
    return static_cast<std::size_t>(splitmix64(h));
  }
};

struct AgentParams {
  double alpha = 0.1;    // learning rate, (0, 1]
  double gamma = 0.95;   // discount, [0, 1)
  double explore_epsilon_start = 1.0;
  double explore_epsilon_end = 0.05;
  // Episodes over which epsilon decays linearly; unset means 80% of the run.
  std::optional<long> epsilon_decay_episodes;
  double eval_epsilon = 0.05;
  long max_steps_per_episode = 400;
  double cell_size = 0.5;
  int n_heading_bins = 16;

  void validate() const;

  bool operator==(const AgentParams&) const = default;
};

struct RewardParams {
  double r_goal = 1.0;
  double r_step = -0.01;
  double r_fail = -1.0;
  // Penetration depth that fails an episode; unset means 0.3x lumen diameter.
  std::optional<double> fail_penetration;

  void validate() const;

  bool operator==(const RewardParams&) const = default;
};

// Sparse expected-return table. Absent entries read as zero; terminal states
// are pinned to zero and never stored.
class QTable {
 public:
  using Row = std::array<double, kActionCount>;

  double value(const StateId& s, Action a) const;
  Row row(const StateId& s) const;
  double max_value(const StateId& s) const;
  // Highest-valued action; ties break in declaration order (BendCw first).
  Action greedy_action(const StateId& s) const;
  void set(const StateId& s, Action a, double value);

  std::size_t size() const { return table_.size(); }
  bool operator==(const QTable& other) const { return table_ == other.table_; }

  nlohmann::json to_json() const;
  static QTable from_json(const nlohmann::json& j);

 private:
  std::unordered_map<StateId, Row, StateIdHash> table_;
};

// Maps a tip pose onto the state grid. Goal takes precedence over Fail.
StateId discretize(Vec2 tip_position, double tip_heading, const AgentParams& params,
                   const geom::LumenMap& lumen, bool fail_flag);

// One Bellman update; stores and returns
//   Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).
double q_update(QTable& q, const StateId& s, Action a, double r, const StateId& s_next,
                double alpha, double gamma);

// Epsilon-greedy. With epsilon = 0 no randomness is consumed.
Action select_action(const QTable& q, const StateId& s, double epsilon, Rng& rng);

double compute_reward(const StateId& prev, Action action, const StateId& next,
                      const RewardParams& params);

// Physical context for one step, recorded when tracing is on.
struct StepSnapshot {
  std::vector<Vec2> joints;
  double tip_command = 0.0;
  double energy = 0.0;
};

// Anything the episode loop can drive: the lumen simulator or a test MDP.
class Env {
 public:
  virtual ~Env() = default;
  virtual StateId reset() = 0;
  virtual StateId step(Action a) = 0;
  virtual std::optional<StepSnapshot> snapshot() const { return std::nullopt; }
};

enum class Mode { Train, Eval };
enum class Outcome { Goal, Fail, Timeout };

struct TraceStep {
  Action action = Action::BendCw;
  double reward = 0.0;
  std::optional<StepSnapshot> snapshot;
};

struct EpisodeResult {
  Outcome outcome = Outcome::Timeout;
  long steps = 0;
  double return_value = 0.0;  // discounted from the episode start
  std::optional<std::vector<TraceStep>> trajectory;
};

// Runs one episode: select, step, reward, and (in Train mode) update.
// Terminates on a terminal state or after max_steps_per_episode.
EpisodeResult run_episode(Env& env, QTable& q, const AgentParams& agent,
                          const RewardParams& reward, Mode mode, double epsilon, Rng& rng,
                          bool record_trace = false);

// Exploration rate for a given training episode (linear decay, then held).
double decayed_epsilon(const AgentParams& agent, long episode, long n_episodes);

struct TrainResult {
  QTable table;
  std::vector<EpisodeResult> curve;
};

TrainResult train(Env& env, const AgentParams& agent, const RewardParams& reward,
                  long n_episodes, Rng& rng);

const char* outcome_name(Outcome o);

}  // namespace lumen::rl
