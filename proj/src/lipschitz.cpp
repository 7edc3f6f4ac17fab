#include "lyapmarl/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lyapmarl {

double estimate_lipschitz(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(Rng&)>& sample_input, int n_samples,
    double scale, uint64_t seed) {
  if (n_samples < 1) {
    throw std::invalid_argument("estimate_lipschitz: n_samples must be >= 1");
  }
  Rng rng(seed);
  double best = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd x1 = sample_input(rng);
    Eigen::VectorXd d(x1.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      d[i] = scale * rng.normal();
    }
    const double dn = d.norm();
    if (dn == 0.0) {
      continue;
    }
    const Eigen::VectorXd x2 = x1 + d;
    const double quotient = (f(x2) - f(x1)).norm() / dn;
    best = std::max(best, quotient);
  }
  return best;
}

namespace {

// A state representative of what training visits: positions around the
// spawn box, free heading, velocities anywhere inside the saturation
// bounds.
GlobalState random_state(const RendezvousEnv& env, Rng& rng) {
  const EnvConfig& cfg = env.config();
  GlobalState state;
  state.agents.resize(cfg.n_agents);
  for (AgentState& agent : state.agents) {
    agent.x = rng.uniform(-1.0, 1.0);
    agent.y = rng.uniform(-1.0, 1.0);
    agent.psi = rng.uniform(-std::numbers::pi, std::numbers::pi);
    agent.v = rng.uniform(-cfg.v_max, cfg.v_max);
    agent.omega = rng.uniform(-cfg.omega_max, cfg.omega_max);
  }
  state.target = cfg.target;
  state.step_index = 0;
  return state;
}

std::vector<AgentAction> unpack_actions(const Eigen::VectorXd& joint) {
  std::vector<AgentAction> actions(joint.size() / 2);
  for (size_t i = 0; i < actions.size(); ++i) {
    actions[i].accel = joint[2 * i];
    actions[i].yaw_accel = joint[2 * i + 1];
  }
  return actions;
}

}  // namespace

double estimate_dynamics_action_lipschitz(const RendezvousEnv& env,
                                          int n_samples, double scale,
                                          uint64_t seed) {
  if (n_samples < 1) {
    throw std::invalid_argument(
        "estimate_dynamics_action_lipschitz: n_samples must be >= 1");
  }
  Rng rng(seed);
  const int joint_dim = 2 * env.n_agents();
  double best = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const GlobalState state = random_state(env, rng);
    Eigen::VectorXd a1(joint_dim);
    for (int i = 0; i < joint_dim; ++i) {
      a1[i] = rng.uniform(-1.0, 1.0);
    }
    Eigen::VectorXd d(joint_dim);
    for (int i = 0; i < joint_dim; ++i) {
      d[i] = scale * rng.normal();
    }
    const double dn = d.norm();
    if (dn == 0.0) {
      continue;
    }
    const Eigen::VectorXd a2 = a1 + d;
    const Eigen::VectorXd f1 =
        env.flat_state(env.step(state, unpack_actions(a1)).state);
    const Eigen::VectorXd f2 =
        env.flat_state(env.step(state, unpack_actions(a2)).state);
    best = std::max(best, (f2 - f1).norm() / dn);
  }
  return best;
}

double estimate_lyapunov_state_lipschitz(const LyapunovCritic& lyapunov,
                                         const RendezvousEnv& env,
                                         int n_samples, double scale,
                                         uint64_t seed) {
  if (n_samples < 1) {
    throw std::invalid_argument(
        "estimate_lyapunov_state_lipschitz: n_samples must be >= 1");
  }
  Rng rng(seed);
  const int joint_dim = 2 * env.n_agents();
  double best = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd s1 = env.flat_state(random_state(env, rng));
    Eigen::VectorXd a(joint_dim);
    for (int i = 0; i < joint_dim; ++i) {
      a[i] = rng.uniform(-1.0, 1.0);
    }
    Eigen::VectorXd d(s1.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      d[i] = scale * rng.normal();
    }
    const double dn = d.norm();
    if (dn == 0.0) {
      continue;
    }
    const Eigen::VectorXd s2 = s1 + d;
    best = std::max(best,
                    std::abs(l_value(lyapunov, s2, a) - l_value(lyapunov, s1, a)) / dn);
  }
  return best;
}

}  // namespace lyapmarl
