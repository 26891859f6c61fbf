#include "lumen/lumen_env.hpp"

#include <utility>

namespace lumen::rl {

LumenEnv::LumenEnv(geom::LumenMap map, robot::RobotParams robot_params,
                   AgentParams agent_params, RewardParams reward_params)
    : map_(std::move(map)),
      prepared_(map_),
      robot_params_(std::move(robot_params)),
      agent_params_(std::move(agent_params)),
      fail_threshold_(reward_params.fail_penetration.value_or(0.3 * map_.diameter())),
      config_(robot::initial_config(map_.entry_pose)) {
  robot_params_.validate();
  agent_params_.validate();
  reward_params.validate();
}

StateId LumenEnv::reset() {
  config_ = robot::initial_config(map_.entry_pose);
  action_counter_ = 0;
  relax_step_hint_ = 0.0;
  return observe(false);
}

StateId LumenEnv::step(Action a) {
  ++action_counter_;
  const auto result =
      robot::apply_action(config_, a, map_, robot_params_, action_counter_, &relax_step_hint_);
  config_ = result.config;

  // Wall damage is judged on settled configurations only: between relaxations
  // (relax_cadence > 1) the raw insertion overlap is a transient of the
  // discrete advance, not a force the robot actually exerts on the wall.
  bool fail = false;
  if (result.relaxed) {
    const auto positions = robot::forward_kinematics(config_, robot_params_.link_length);
    for (std::size_t j = 1; j < positions.size(); ++j) {
      if (prepared_.penetration(positions[j]).depth > fail_threshold_) {
        fail = true;
        break;
      }
    }
  }
  return observe(fail);
}

StateId LumenEnv::observe(bool fail_flag) const {
  const auto positions = robot::forward_kinematics(config_, robot_params_.link_length);
  return discretize(positions.back(), robot::tip_heading(config_), agent_params_, map_,
                    fail_flag);
}

std::optional<StepSnapshot> LumenEnv::snapshot() const {
  StepSnapshot snap;
  snap.joints = robot::forward_kinematics(config_, robot_params_.link_length);
  snap.tip_command = config_.tip_command;
  snap.energy = robot::energy(config_, map_, robot_params_).total;
  return snap;
}

}  // namespace lumen::rl
