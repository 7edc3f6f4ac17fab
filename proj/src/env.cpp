#include "lyapmarl/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lyapmarl/rng.hpp"

namespace lyapmarl {

namespace {

constexpr double kPi = std::numbers::pi;

double clamp(double x, double lo, double hi) {
  return std::min(std::max(x, lo), hi);
}

}  // namespace

double wrap_angle(double psi) {
  double w = std::remainder(psi, 2.0 * kPi);
  if (w <= -kPi) {
    w += 2.0 * kPi;
  }
  return w;
}

RendezvousEnv::RendezvousEnv(EnvConfig config, CommGraph graph)
    : config_(std::move(config)), graph_(std::move(graph)) {
  if (config_.n_agents <= 0) {
    throw std::invalid_argument("RendezvousEnv: n_agents must be positive");
  }
  if (graph_.n_agents() != config_.n_agents) {
    throw std::invalid_argument(
        "RendezvousEnv: graph size does not match n_agents");
  }
  if (config_.dt <= 0.0 || config_.episode_length <= 0) {
    throw std::invalid_argument("RendezvousEnv: dt and episode_length must be positive");
  }
  if (config_.leaders.empty()) {
    throw std::invalid_argument("RendezvousEnv: at least one leader required");
  }
  leader_mask_.assign(config_.n_agents, false);
  for (int leader : config_.leaders) {
    if (leader < 0 || leader >= config_.n_agents) {
      throw std::invalid_argument("RendezvousEnv: leader index " +
                                  std::to_string(leader) + " out of range");
    }
    leader_mask_[leader] = true;
  }
}

GlobalState RendezvousEnv::reset(uint64_t seed) const {
  Rng rng(seed);
  GlobalState state;
  state.agents.resize(config_.n_agents);
  for (AgentState& agent : state.agents) {
    agent.x = rng.uniform(-1.0, 1.0);
    agent.y = rng.uniform(-1.0, 1.0);
    // uniform_real yields [-pi, pi); negating gives the required (-pi, pi].
    agent.psi = -rng.uniform(-kPi, kPi);
    agent.v = 0.0;
    agent.omega = 0.0;
  }
  state.target = config_.target;
  state.step_index = 0;
  return state;
}

StepResult RendezvousEnv::step(const GlobalState& state,
                               const std::vector<AgentAction>& actions) const {
  if (static_cast<int>(actions.size()) != config_.n_agents) {
    throw std::invalid_argument("step: expected " +
                                std::to_string(config_.n_agents) +
                                " actions, got " +
                                std::to_string(actions.size()));
  }
  if (static_cast<int>(state.agents.size()) != config_.n_agents) {
    throw std::invalid_argument("step: state has wrong agent count");
  }
  for (const AgentAction& action : actions) {
    if (!std::isfinite(action.accel) || !std::isfinite(action.yaw_accel)) {
      throw std::invalid_argument("step: non-finite action component");
    }
  }

  StepResult result;
  result.state = state;
  result.state.step_index = state.step_index + 1;
  for (int i = 0; i < config_.n_agents; ++i) {
    const AgentState& cur = state.agents[i];
    AgentState& nxt = result.state.agents[i];
    const double a = clamp(actions[i].accel, -1.0, 1.0);
    const double r = clamp(actions[i].yaw_accel, -1.0, 1.0);
    nxt.x = cur.x + config_.dt * cur.v * std::cos(cur.psi);
    nxt.y = cur.y + config_.dt * cur.v * std::sin(cur.psi);
    nxt.psi = wrap_angle(cur.psi + config_.dt * cur.omega);
    nxt.v = clamp(cur.v + config_.dt * a, -config_.v_max, config_.v_max);
    nxt.omega =
        clamp(cur.omega + config_.dt * r, -config_.omega_max, config_.omega_max);
  }

  const bool reached = success(result.state);
  result.reward = -cost(result.state) + (reached ? config_.success_bonus : 0.0);
  result.done = reached || result.state.step_index >= config_.episode_length;
  return result;
}

Eigen::VectorXd RendezvousEnv::observe(const GlobalState& state, int i) const {
  if (i < 0 || i >= config_.n_agents) {
    throw std::out_of_range("observe: agent index " + std::to_string(i) +
                            " out of range");
  }
  const AgentState& self = state.agents[i];
  const std::vector<int>& nbrs = graph_.neighbors(i);
  Eigen::VectorXd obs(9 + 4 * static_cast<int>(nbrs.size()));
  obs[0] = self.x;
  obs[1] = self.y;
  obs[2] = std::cos(self.psi);
  obs[3] = std::sin(self.psi);
  obs[4] = self.v;
  obs[5] = self.omega;
  if (leader_mask_[i]) {
    obs[6] = state.target[0] - self.x;
    obs[7] = state.target[1] - self.y;
    obs[8] = 1.0;
  } else {
    obs[6] = 0.0;
    obs[7] = 0.0;
    obs[8] = 0.0;
  }
  int k = 9;
  const double vx = self.v * std::cos(self.psi);
  const double vy = self.v * std::sin(self.psi);
  for (int j : nbrs) {
    const AgentState& other = state.agents[j];
    obs[k++] = other.x - self.x;
    obs[k++] = other.y - self.y;
    obs[k++] = other.v * std::cos(other.psi) - vx;
    obs[k++] = other.v * std::sin(other.psi) - vy;
  }
  return obs;
}

double RendezvousEnv::cost(const GlobalState& state) const {
  double dist_sum = 0.0;
  double speed_sum = 0.0;
  for (const AgentState& agent : state.agents) {
    dist_sum += std::hypot(agent.x - state.target[0], agent.y - state.target[1]);
    speed_sum += std::abs(agent.v);
  }
  const double n = static_cast<double>(config_.n_agents);
  return dist_sum / n + config_.w_v * speed_sum / n;
}

bool RendezvousEnv::success(const GlobalState& state) const {
  for (const AgentState& agent : state.agents) {
    const double d =
        std::hypot(agent.x - state.target[0], agent.y - state.target[1]);
    if (d >= config_.success_radius) {
      return false;
    }
  }
  return true;
}

int RendezvousEnv::obs_dim(int i) const {
  return 9 + 4 * static_cast<int>(graph_.neighbors(i).size());
}

bool RendezvousEnv::is_leader(int i) const {
  if (i < 0 || i >= config_.n_agents) {
    throw std::out_of_range("is_leader: agent index out of range");
  }
  return leader_mask_[i];
}

Eigen::VectorXd RendezvousEnv::flat_state(const GlobalState& state) const {
  Eigen::VectorXd flat(flat_state_dim());
  for (int i = 0; i < config_.n_agents; ++i) {
    const AgentState& agent = state.agents[i];
    flat[6 * i + 0] = agent.x;
    flat[6 * i + 1] = agent.y;
    flat[6 * i + 2] = std::cos(agent.psi);
    flat[6 * i + 3] = std::sin(agent.psi);
    flat[6 * i + 4] = agent.v;
    flat[6 * i + 5] = agent.omega;
  }
  flat[6 * config_.n_agents + 0] = state.target[0];
  flat[6 * config_.n_agents + 1] = state.target[1];
  return flat;
}

double RendezvousEnv::cost_from_flat(const Eigen::VectorXd& flat) const {
  if (flat.size() != flat_state_dim()) {
    throw std::invalid_argument("cost_from_flat: wrong layout");
  }
  const double tx = flat[6 * config_.n_agents + 0];
  const double ty = flat[6 * config_.n_agents + 1];
  double dist_sum = 0.0;
  double speed_sum = 0.0;
  for (int i = 0; i < config_.n_agents; ++i) {
    dist_sum += std::hypot(flat[6 * i + 0] - tx, flat[6 * i + 1] - ty);
    speed_sum += std::abs(flat[6 * i + 4]);
  }
  const double n = static_cast<double>(config_.n_agents);
  return dist_sum / n + config_.w_v * speed_sum / n;
}

}  // namespace lyapmarl
