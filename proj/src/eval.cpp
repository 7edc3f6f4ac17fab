#include "lyapmarl/eval.hpp"

#include <cmath>
#include <stdexcept>

namespace lyapmarl {

double lyapunov_decrease_ratio(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs,
    const LyapunovCritic& lyapunov) {
  if (pairs.size() < 2) {
    throw std::invalid_argument(
        "lyapunov_decrease_ratio: need at least two (s, a) pairs");
  }
  int decreasing = 0;
  double prev = l_value(lyapunov, pairs[0].first, pairs[0].second);
  for (size_t t = 1; t < pairs.size(); ++t) {
    const double cur = l_value(lyapunov, pairs[t].first, pairs[t].second);
    if (cur - prev <= 0.0) {
      ++decreasing;
    }
    prev = cur;
  }
  return static_cast<double>(decreasing) / static_cast<double>(pairs.size() - 1);
}

double mean_decrease_ratio(
    const std::vector<std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>>&
        episode_pairs,
    const LyapunovCritic& lyapunov) {
  if (episode_pairs.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto& pairs : episode_pairs) {
    total += pairs.size() < 2 ? 1.0 : lyapunov_decrease_ratio(pairs, lyapunov);
  }
  return total / static_cast<double>(episode_pairs.size());
}

EvalResult evaluate_policy(const RendezvousEnv& env,
                           const std::vector<ActorPolicy>& actors,
                           const LyapunovCritic* lyapunov,
                           long long n_episodes, uint64_t seed) {
  if (n_episodes < 1) {
    throw std::invalid_argument("evaluate_policy: n_episodes must be >= 1");
  }
  if (static_cast<int>(actors.size()) != env.n_agents()) {
    throw std::invalid_argument("evaluate_policy: actor count mismatch");
  }
  const int n = env.n_agents();
  EvalResult result;
  result.report.has_lyapunov = lyapunov != nullptr;
  result.episode_pairs.resize(n_episodes);

  double return_sum = 0.0;
  double final_distance_sum = 0.0;
  double ratio_sum = 0.0;

  for (long long e = 0; e < n_episodes; ++e) {
    GlobalState state = env.reset(seed + static_cast<uint64_t>(e));
    auto& pairs = result.episode_pairs[e];
    double episode_return = 0.0;
    int step = 0;
    bool done = false;
    while (!done) {
      std::vector<AgentAction> actions(n);
      Eigen::VectorXd joint(2 * n);
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d a = deterministic_action(actors[i], env.observe(state, i));
        actions[i] = {a[0], a[1]};
        joint[2 * i] = a[0];
        joint[2 * i + 1] = a[1];
      }
      const StepResult sr = env.step(state, actions);
      const double state_cost = env.cost(state);
      for (int i = 0; i < n; ++i) {
        TrajectoryRow row;
        row.episode = e;
        row.step = step;
        row.agent = i;
        row.x = state.agents[i].x;
        row.y = state.agents[i].y;
        row.psi = state.agents[i].psi;
        row.v = state.agents[i].v;
        row.omega = state.agents[i].omega;
        row.a = actions[i].accel;
        row.r = actions[i].yaw_accel;
        row.reward = sr.reward;
        row.cost = state_cost;
        result.trajectory.push_back(row);
      }
      pairs.emplace_back(env.flat_state(state), joint);
      episode_return += sr.reward;
      state = sr.state;
      done = sr.done;
      ++step;
    }

    const bool success = env.success(state);
    double final_distance = 0.0;
    for (const AgentState& agent : state.agents) {
      final_distance +=
          std::hypot(agent.x - state.target[0], agent.y - state.target[1]);
    }
    final_distance /= static_cast<double>(n);

    EvalEpisodeRow row;
    row.episode = e;
    row.steps = step;
    row.episode_return = episode_return;
    row.success = success ? 1 : 0;
    row.final_distance = final_distance;
    if (lyapunov != nullptr) {
      row.lyap_decrease_ratio =
          pairs.size() < 2 ? 1.0 : lyapunov_decrease_ratio(pairs, *lyapunov);
      ratio_sum += row.lyap_decrease_ratio;
    }
    result.episodes.push_back(row);

    result.report.n_success += success ? 1 : 0;
    return_sum += episode_return;
    final_distance_sum += final_distance;
  }

  result.report.n_episodes = n_episodes;
  result.report.success_rate = 100.0 *
                               static_cast<double>(result.report.n_success) /
                               static_cast<double>(n_episodes);
  result.report.mean_return = return_sum / static_cast<double>(n_episodes);
  result.report.mean_final_distance =
      final_distance_sum / static_cast<double>(n_episodes);
  if (lyapunov != nullptr) {
    result.report.lyap_decrease_ratio =
        ratio_sum / static_cast<double>(n_episodes);
  }
  return result;
}

}  // namespace lyapmarl
