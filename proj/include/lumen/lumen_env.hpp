#pragma once

#include "lumen/geometry.hpp"
#include "lumen/qlearning.hpp"
#include "lumen/robot.hpp"

namespace lumen::rl {

// The simulated navigation task: a serial-chain robot inside a bifurcating
// lumen, exposed through the Env interface. Transitions are deterministic;
// all episode randomness comes from action selection.
class LumenEnv : public Env {
 public:
  LumenEnv(geom::LumenMap map, robot::RobotParams robot_params, AgentParams agent_params,
           RewardParams reward_params);

  StateId reset() override;
  StateId step(Action a) override;
  std::optional<StepSnapshot> snapshot() const override;

  const robot::RobotConfig& config() const { return config_; }
  const geom::LumenMap& map() const { return map_; }
  double fail_threshold() const { return fail_threshold_; }

 private:
  StateId observe(bool fail_flag) const;

  geom::LumenMap map_;
  geom::PreparedLumen prepared_;
  robot::RobotParams robot_params_;
  AgentParams agent_params_;
  double fail_threshold_;
  robot::RobotConfig config_;
  long action_counter_ = 0;
  double relax_step_hint_ = 0.0;
};

}  // namespace lumen::rl
