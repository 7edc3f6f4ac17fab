#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "lyapmarl/actor.hpp"
#include "lyapmarl/checkpoint.hpp"
#include "lyapmarl/config.hpp"
#include "lyapmarl/critic.hpp"
#include "lyapmarl/env.hpp"
#include "lyapmarl/replay.hpp"

namespace lyapmarl {

// One metrics.csv row, emitted per training episode.
struct MetricsRow {
  long long episode = 0;    // 1-based
  long long env_steps = 0;  // cumulative across the run
  double mean_return = 0.0;
  int success = 0;
  double J_Q = 0.0;   // losses averaged over the episode's gradient rounds
  double J_pi = 0.0;
  double J_L = 0.0;
  double alpha = 0.0;
  double mean_delta_l = 0.0;
  double lyap_decrease_ratio = 0.0;
};

// Sampled minibatch in matrix form: one transition per row.
struct UpdateBatch {
  Eigen::MatrixXd s_flat;
  Eigen::MatrixXd a;  // buffer (old-policy) joint actions
  Eigen::VectorXd r;
  Eigen::MatrixXd s_next_flat;
  Eigen::VectorXd done;      // 0/1
  Eigen::VectorXd cost_now;  // c(s_t), recomputed from s_flat
  Eigen::VectorXd l_targets; // truncated cost sums (Lyapunov runs only)
  std::vector<Eigen::MatrixXd> obs;       // per agent
  std::vector<Eigen::MatrixXd> obs_next;  // per agent
};

struct ActorUpdateResult {
  double loss = 0.0;          // J_pi, mean pre-step row loss
  double mean_delta_l = 0.0;  // 0 when the constraint is off
  Eigen::VectorXd row_losses;
  Eigen::VectorXd joint_log_prob;  // reused by the temperature update
};

// J_pi and its exact per-policy parameter gradients. Per row the loss is
// alpha * sum_i log pi_i - q_min(s, a~) and, when lyapunov is non-null,
// + beta * delta_l with action_gap = ||a~ - a_buffer||. Gradients reach the
// constraint only through the action gap; l_next is evaluated at
// (s', next_actions) and treated as a constant. noise fixes the
// reparameterization draw, so the loss is a deterministic function of the
// policy parameters. Pass null to skip gradient output.
ActorUpdateResult actor_loss_and_grads(const std::vector<ActorPolicy>& actors,
                                       const TwinQCritic& critic,
                                       const LyapunovCritic* lyapunov,
                                       const UpdateBatch& batch,
                                       const Eigen::MatrixXd& noise,
                                       const Eigen::MatrixXd& next_actions,
                                       double alpha, const LyapConfig& lyap,
                                       std::vector<NetGrads>* grads_out);

// One simultaneous update of all agent policies: computes
// actor_loss_and_grads against pre-update parameters, then every policy
// takes one Adam step.
ActorUpdateResult actor_update(std::vector<ActorPolicy>& actors,
                               std::vector<AdamState>& actor_adams,
                               const TwinQCritic& critic,
                               const LyapunovCritic* lyapunov,
                               const UpdateBatch& batch,
                               const Eigen::MatrixXd& noise,
                               const Eigen::MatrixXd& next_actions,
                               double alpha, const LyapConfig& lyap,
                               double lr);

// Gradient step on log alpha of E[-(sum log pi + joint_target_entropy)] *
// alpha; returns the new alpha = exp(log_alpha), always positive.
double temperature_update(double& log_alpha, ScalarAdam& adam,
                          const Eigen::VectorXd& joint_log_probs,
                          double joint_target_entropy, double lr);

// Orchestrates the full training loop: episode collection, replay, and per
// environment step (after warmup) updates_per_step gradient rounds of
// critic, actors, temperature, target soft update, and (when use_lyapunov)
// the Lyapunov regression. Fully deterministic given config.seed.
class MasacTrainer {
 public:
  explicit MasacTrainer(const TrainerConfig& config);

  struct Callbacks {
    // Called after every episode with its metrics row.
    std::function<void(const MetricsRow&)> on_episode;
    // Called at every checkpoint_interval boundary.
    std::function<void(long long episode, const CheckpointData&)> on_checkpoint;
  };

  // Runs total_episodes episodes. Throws on any non-finite loss, naming the
  // failing head; artifacts emitted so far stay valid.
  void train(const Callbacks& callbacks = {});

  CheckpointData snapshot() const;

  const RendezvousEnv& env() const { return env_; }
  const std::vector<ActorPolicy>& actors() const { return actors_; }
  const TwinQCritic& critic() const { return critic_; }
  const LyapunovCritic& lyapunov() const { return lyapunov_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  double alpha() const;
  long long env_steps() const { return env_steps_; }
  double lip_product() const { return lip_product_; }

 private:
  void run_episode(long long episode, MetricsRow& row);
  void gradient_round(double& jq, double& jpi, double& jl, double& mean_dl);
  UpdateBatch sample_batch();

  TrainerConfig config_;
  RendezvousEnv env_;
  std::vector<ActorPolicy> actors_;
  std::vector<AdamState> actor_adams_;
  TwinQCritic critic_;
  AdamState critic_adam1_;
  AdamState critic_adam2_;
  LyapunovCritic lyapunov_;  // constructed always, updated only when enabled
  AdamState lyapunov_adam_;
  double log_alpha_;
  ScalarAdam alpha_adam_;
  ReplayBuffer buffer_;
  Rng rng_;
  long long env_steps_ = 0;
  double lr_actor_;
  double lr_critic_;
  double lr_alpha_;
  double lr_lyapunov_;
  double lip_product_;
  // executed (flat state, joint action) pairs of the episode in flight,
  // used for the per-episode Lyapunov decrease diagnostic
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> episode_pairs_;
};

}  // namespace lyapmarl
