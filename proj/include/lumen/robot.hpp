#pragma once

#include <vector>

#include "lumen/action.hpp"
#include "lumen/geometry.hpp"
#include "lumen/vec2.hpp"

namespace lumen::robot {

struct RobotParams {
  double k1 = 1.0;            // joint spring constant (energy/rad^2)
  double k2 = 50.0;           // lumen contact spring constant (energy/length^2)
  double link_length = 0.5;
  int max_links = 24;
  double bend_step = 0.1;     // tip angle change per bend action (rad)
  double tip_limit = 1.2;     // |commanded tip angle| bound (rad)
  double relax_step = 0.05;   // gradient descent step scale
  double relax_tol = 1e-8;    // |dE| plateau threshold
  int relax_max_iters = 2000;
  int relax_cadence = 1;      // relax every k-th action

  void validate() const;

  bool operator==(const RobotParams&) const = default;
};

// A point of configuration space: base pose, active link angles and the
// commanded tip angle. angles.back() always equals tip_command.
struct RobotConfig {
  Pose2 base_pose;
  std::vector<double> angles;
  double tip_command = 0.0;

  int n_inserted() const { return static_cast<int>(angles.size()); }

  bool operator==(const RobotConfig&) const = default;
};

// One link inserted, straight, tip command zero.
RobotConfig initial_config(const Pose2& entry);

// Joint positions x0..xn (n_inserted + 1 points), x0 at the base.
std::vector<Vec2> forward_kinematics(const RobotConfig& config, double link_length);

// Orientation of the distal link: base heading plus the sum of joint angles.
double tip_heading(const RobotConfig& config);

struct JointContact {
  int joint = 0;  // joint position index (1..n)
  geom::PenetrationResult pen;
};

struct EnergyReport {
  double total = 0.0;
  double spring_part = 0.0;
  double contact_part = 0.0;
  std::vector<JointContact> contacts;  // penetrating joints only
};

// E = 1/2 k1 sum(theta_i^2) + 1/2 k2 sum over penetrating joints of
// (dx_j^2 + dy_j^2).
EnergyReport energy(const RobotConfig& config, const geom::LumenMap& lumen,
                    const RobotParams& params);

// Analytic dE/dtheta_i over the relaxable joints (all but the commanded tip),
// with the penetration direction held fixed while differentiating.
std::vector<double> energy_gradient(const RobotConfig& config, const geom::LumenMap& lumen,
                                    const RobotParams& params);

struct RelaxResult {
  RobotConfig config;
  int iterations = 0;
  double final_energy = 0.0;
};

// Damped Newton descent on the relaxable joints: exact gradient, a
// Gauss-Newton Hessian (each contact stiffens the chain along its contact
// normal only), and backtracking step halving so accepted energies never
// increase. Stops when the energy change drops below relax_tol or
// relax_max_iters is hit. The tip command is clamped throughout. When
// energy_trace is non-null it receives the energy of every accepted iterate,
// starting with the input.
RelaxResult relax(const RobotConfig& config, const geom::LumenMap& lumen,
                  const RobotParams& params, std::vector<double>* energy_trace = nullptr);

struct ActionResult {
  RobotConfig config;
  bool advance_exhausted = false;  // Advance with all links already inserted
  bool relaxed = false;
  int relax_iterations = 0;
};

// Bend actions move the tip command one step (clamped to the tip limit);
// Advance feeds one more link in at the held proximal end: the settled body
// keeps its shape (the old tip angle becomes an ordinary relaxable joint)
// and a new distal link is activated at tip_command, so a bent tip leads
// the body around corners. Relaxation runs afterwards iff action_counter is
// a multiple of relax_cadence (the episode loop counts actions from 1).
// relax_step_hint, when given, carries the accepted descent step across
// calls so consecutive relaxations skip the step re-discovery.
ActionResult apply_action(const RobotConfig& config, Action action,
                          const geom::LumenMap& lumen, const RobotParams& params,
                          long action_counter, double* relax_step_hint = nullptr);

}  // namespace lumen::robot
