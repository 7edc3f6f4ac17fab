#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "lyapmarl/actor.hpp"
#include "lyapmarl/critic.hpp"
#include "lyapmarl/env.hpp"

namespace lyapmarl {

// Aggregate result of an evaluation campaign.
struct EvalReport {
  long long n_episodes = 0;
  long long n_success = 0;
  double success_rate = 0.0;  // percent: 100 * n_success / n_episodes
  double mean_return = 0.0;
  double mean_final_distance = 0.0;
  double lyap_decrease_ratio = 0.0;  // populated when a Lyapunov net is given
  bool has_lyapunov = false;
};

struct EvalEpisodeRow {
  long long episode = 0;
  int steps = 0;
  double episode_return = 0.0;
  int success = 0;
  double final_distance = 0.0;
  double lyap_decrease_ratio = 0.0;
};

// One executed step of one agent, for the trajectory CSV dump.
struct TrajectoryRow {
  long long episode = 0;
  int step = 0;
  int agent = 0;
  double x = 0.0, y = 0.0, psi = 0.0, v = 0.0, omega = 0.0;
  double a = 0.0, r = 0.0;
  double reward = 0.0;  // shared reward received for this step
  double cost = 0.0;    // cost of the state in this row
};

struct EvalResult {
  EvalReport report;
  std::vector<EvalEpisodeRow> episodes;
  std::vector<TrajectoryRow> trajectory;
  // executed (flat state, joint action) pairs per episode, kept so the
  // Lyapunov decrease statistic can be recomputed under a different net
  std::vector<std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>>
      episode_pairs;
};

// Fraction of consecutive (s, a) pairs along a trajectory whose Lyapunov
// value does not increase. Requires at least two pairs.
double lyapunov_decrease_ratio(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs,
    const LyapunovCritic& lyapunov);

// Mean of the per-episode decrease ratio over a whole evaluation; episodes
// too short to compare count as fully decreasing.
double mean_decrease_ratio(
    const std::vector<std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>>&
        episode_pairs,
    const LyapunovCritic& lyapunov);

// Rolls out n_episodes greedy (tanh-mean) episodes with per-episode reset
// seeds seed + episode index. Success is judged on the final state.
EvalResult evaluate_policy(const RendezvousEnv& env,
                           const std::vector<ActorPolicy>& actors,
                           const LyapunovCritic* lyapunov,
                           long long n_episodes, uint64_t seed);

}  // namespace lyapmarl
