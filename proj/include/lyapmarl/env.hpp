#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "lyapmarl/comm_graph.hpp"

namespace lyapmarl {

struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;  // heading, kept in (-pi, pi]
  double v = 0.0;
  double omega = 0.0;
};

struct GlobalState {
  std::vector<AgentState> agents;
  std::array<double, 2> target = {0.0, 0.0};
  int step_index = 0;
};

// Commanded acceleration pair; both components clamped to [-1, 1] on entry.
struct AgentAction {
  double accel = 0.0;
  double yaw_accel = 0.0;
};

struct StepResult {
  GlobalState state;
  double reward = 0.0;
  bool done = false;
};

struct EnvConfig {
  int n_agents = 0;
  double dt = 0.1;
  int episode_length = 40;
  std::vector<int> leaders = {0};
  std::array<double, 2> target = {0.0, 0.0};
  double success_radius = 0.1;
  double v_max = 1.0;
  double omega_max = 1.0;
  double w_v = 0.1;
  double success_bonus = 10.0;
};

// Wraps an angle to (-pi, pi].
double wrap_angle(double psi);

// Multi-agent unicycle rendezvous task. The core is purely functional:
// step/observe/cost take the state explicitly and the instance holds only
// immutable configuration, so episodes can run concurrently.
class RendezvousEnv {
 public:
  RendezvousEnv(EnvConfig config, CommGraph graph);

  // Spawns agents uniformly in the [-1, 1]^2 box with heading uniform in
  // (-pi, pi] and zero velocities. Fully determined by the seed.
  GlobalState reset(uint64_t seed) const;

  // Explicit Euler update: positions advance with the pre-step speed and
  // heading, then heading integrates the pre-step angular rate, then the
  // velocities absorb the (clamped) commands and are saturated. The shared
  // reward is -cost(next state) plus the success bonus when every agent is
  // inside the target radius.
  StepResult step(const GlobalState& state,
                  const std::vector<AgentAction>& actions) const;

  // Local observation of agent i:
  //   [x, y, cos psi, sin psi, v, omega,
  //    target relative position (leaders) or zeros (followers),
  //    leader flag,
  //    per neighbor in ascending index order: relative position and
  //    relative velocity components]
  // giving 9 + 4 * |neighbors(i)| entries.
  Eigen::VectorXd observe(const GlobalState& state, int i) const;

  // Mean distance to target plus w_v times mean absolute speed. Zero exactly
  // at the rendezvous equilibrium (all agents on target, at rest).
  double cost(const GlobalState& state) const;

  bool success(const GlobalState& state) const;

  int obs_dim(int i) const;
  int n_agents() const { return config_.n_agents; }
  bool is_leader(int i) const;

  // Global state flattened for the centralized critics: per agent
  // (x, y, cos psi, sin psi, v, omega), then the target position.
  Eigen::VectorXd flat_state(const GlobalState& state) const;
  int flat_state_dim() const { return 6 * config_.n_agents + 2; }

  // cost() evaluated on the flattened layout; used where only the stored
  // critic input is available.
  double cost_from_flat(const Eigen::VectorXd& flat) const;

  const EnvConfig& config() const { return config_; }
  const CommGraph& graph() const { return graph_; }

 private:
  EnvConfig config_;
  CommGraph graph_;
  std::vector<bool> leader_mask_;
};

}  // namespace lyapmarl
