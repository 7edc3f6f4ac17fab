#include "lyapmarl/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "lyapmarl/eval.hpp"
#include "lyapmarl/lipschitz.hpp"

namespace lyapmarl {

namespace {

Eigen::MatrixXd join_cols(const Eigen::MatrixXd& left,
                          const Eigen::MatrixXd& right) {
  Eigen::MatrixXd out(left.rows(), left.cols() + right.cols());
  out << left, right;
  return out;
}

}  // namespace

ActorUpdateResult actor_loss_and_grads(const std::vector<ActorPolicy>& actors,
                                       const TwinQCritic& critic,
                                       const LyapunovCritic* lyapunov,
                                       const UpdateBatch& batch,
                                       const Eigen::MatrixXd& noise,
                                       const Eigen::MatrixXd& next_actions,
                                       double alpha, const LyapConfig& lyap,
                                       std::vector<NetGrads>* grads_out) {
  const Eigen::Index B = batch.s_flat.rows();
  const int n_agents = static_cast<int>(actors.size());
  const int joint_dim = 2 * n_agents;
  const double inv_b = 1.0 / static_cast<double>(B);

  // Fresh reparameterized joint action at s; every policy is evaluated
  // against the same pre-update critic and co-players.
  std::vector<ActorForward> forwards(n_agents);
  Eigen::MatrixXd new_actions(B, joint_dim);
  Eigen::VectorXd joint_log_prob = Eigen::VectorXd::Zero(B);
  for (int i = 0; i < n_agents; ++i) {
    forwards[i] = actor_forward(actors[i], batch.obs[i],
                                noise.middleCols(2 * i, kActionDim));
    new_actions.middleCols(2 * i, kActionDim) = forwards[i].action;
    joint_log_prob += forwards[i].log_prob;
  }

  const Eigen::MatrixXd sa_new = join_cols(batch.s_flat, new_actions);
  std::vector<int> which_head;
  ForwardTrace trace1, trace2;
  const Eigen::VectorXd qmin =
      q_min_batch(critic, sa_new, false, &which_head, &trace1, &trace2);

  ActorUpdateResult result;
  result.row_losses = alpha * joint_log_prob - qmin;
  result.joint_log_prob = joint_log_prob;

  // dLoss/d(new_actions): the -q_min term routes through the argmin head.
  Eigen::VectorXd head1_grad = Eigen::VectorXd::Zero(B);
  Eigen::VectorXd head2_grad = Eigen::VectorXd::Zero(B);
  for (Eigen::Index b = 0; b < B; ++b) {
    (which_head[b] == 1 ? head1_grad : head2_grad)[b] = -inv_b;
  }
  NetGrads scratch1 = zero_grads(critic.q1);
  NetGrads scratch2 = zero_grads(critic.q2);
  const Eigen::MatrixXd in1 = backward(critic.q1, trace1, head1_grad, scratch1);
  const Eigen::MatrixXd in2 = backward(critic.q2, trace2, head2_grad, scratch2);
  Eigen::MatrixXd grad_actions =
      in1.rightCols(joint_dim) + in2.rightCols(joint_dim);

  if (lyapunov != nullptr) {
    const Eigen::VectorXd l_next =
        l_value_batch(*lyapunov, join_cols(batch.s_next_flat, next_actions));
    const Eigen::VectorXd l_curr =
        l_value_batch(*lyapunov, join_cols(batch.s_flat, batch.a));
    double dl_sum = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) {
      const Eigen::VectorXd gap_vec =
          (new_actions.row(b) - batch.a.row(b)).transpose();
      const double gap = gap_vec.norm();
      const double dl = delta_l(l_next[b], l_curr[b], lyap.lip_product, gap,
                                lyap.cost_weight, batch.cost_now[b]);
      result.row_losses[b] += lyap.beta * dl;
      dl_sum += dl;
      if (gap > 0.0) {
        // Only the action-gap term carries policy gradient.
        grad_actions.row(b) +=
            (lyap.beta * lyap.lip_product * inv_b / gap) * gap_vec.transpose();
      }
    }
    result.mean_delta_l = dl_sum * inv_b;
  }

  result.loss = result.row_losses.mean();
  if (!std::isfinite(result.loss)) {
    throw std::runtime_error("actor update produced non-finite loss J_pi");
  }

  if (grads_out != nullptr) {
    const Eigen::VectorXd grad_log_prob =
        Eigen::VectorXd::Constant(B, alpha * inv_b);
    grads_out->clear();
    grads_out->reserve(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      NetGrads g = zero_grads(actors[i].net);
      actor_backward(actors[i], forwards[i],
                     grad_actions.middleCols(2 * i, kActionDim), grad_log_prob,
                     g);
      grads_out->push_back(std::move(g));
    }
  }
  return result;
}

ActorUpdateResult actor_update(std::vector<ActorPolicy>& actors,
                               std::vector<AdamState>& actor_adams,
                               const TwinQCritic& critic,
                               const LyapunovCritic* lyapunov,
                               const UpdateBatch& batch,
                               const Eigen::MatrixXd& noise,
                               const Eigen::MatrixXd& next_actions,
                               double alpha, const LyapConfig& lyap,
                               double lr) {
  std::vector<NetGrads> grads;
  ActorUpdateResult result = actor_loss_and_grads(
      actors, critic, lyapunov, batch, noise, next_actions, alpha, lyap,
      &grads);
  // All gradients were taken against pre-step parameters; the policies move
  // simultaneously.
  for (size_t i = 0; i < actors.size(); ++i) {
    adam_step(actors[i].net, grads[i], actor_adams[i], lr);
  }
  return result;
}

double temperature_update(double& log_alpha, ScalarAdam& adam,
                          const Eigen::VectorXd& joint_log_probs,
                          double joint_target_entropy, double lr) {
  const double alpha = std::exp(log_alpha);
  const double grad =
      -(joint_log_probs.mean() + joint_target_entropy) * alpha;
  adam_step_scalar(log_alpha, grad, adam, lr);
  if (!std::isfinite(log_alpha)) {
    throw std::runtime_error("temperature update produced non-finite log alpha");
  }
  return std::exp(log_alpha);
}

MasacTrainer::MasacTrainer(const TrainerConfig& config)
    : config_(config),
      env_(build_env(config)),
      buffer_(static_cast<size_t>(config.buffer_capacity)),
      rng_(mix_seed(config.seed, 5)),
      lr_actor_(config.lr_actor),
      lr_critic_(config.lr_critic),
      lr_alpha_(config.lr_alpha),
      lr_lyapunov_(config.lr_lyapunov),
      lip_product_(config.lyap.lip_product) {
  validate_config(config_);
  if (!env_.graph().is_connected()) {
    throw std::invalid_argument("trainer: communication graph must be connected");
  }
  const int n = config_.env.n_agents;
  actors_.reserve(n);
  actor_adams_.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng init(mix_seed(config_.seed, 100 + static_cast<uint64_t>(i)));
    actors_.push_back(make_actor(env_.obs_dim(i), init));
    actor_adams_.push_back(make_adam(actors_[i].net));
  }
  const int critic_in = env_.flat_state_dim() + 2 * n;
  Rng critic_init(mix_seed(config_.seed, 200));
  critic_ = make_twin_critic(critic_in, critic_init);
  critic_adam1_ = make_adam(critic_.q1);
  critic_adam2_ = make_adam(critic_.q2);
  Rng lyap_init(mix_seed(config_.seed, 300));
  lyapunov_ = make_lyapunov_critic(critic_in, lyap_init);
  lyapunov_adam_ = make_adam(lyapunov_.net);
  log_alpha_ = std::log(config_.alpha_init);

  if (config_.use_lyapunov && config_.lyap.estimate_lipschitz) {
    const double l_f = estimate_dynamics_action_lipschitz(
        env_, 10000, 0.1, mix_seed(config_.seed, 400));
    const double l_l = estimate_lyapunov_state_lipschitz(
        lyapunov_, env_, 10000, 0.1, mix_seed(config_.seed, 401));
    lip_product_ = l_f * l_l;
  }
}

double MasacTrainer::alpha() const { return std::exp(log_alpha_); }

CheckpointData MasacTrainer::snapshot() const {
  CheckpointData data;
  data.actors = actors_;
  data.critic = critic_;
  data.has_lyapunov = config_.use_lyapunov;
  data.lyapunov = lyapunov_;
  data.log_alpha = log_alpha_;
  return data;
}

void MasacTrainer::train(const Callbacks& callbacks) {
  for (long long episode = 1; episode <= config_.total_episodes; ++episode) {
    MetricsRow row;
    run_episode(episode, row);
    if (callbacks.on_episode) {
      callbacks.on_episode(row);
    }
    if (callbacks.on_checkpoint && config_.checkpoint_interval > 0 &&
        episode % config_.checkpoint_interval == 0) {
      callbacks.on_checkpoint(episode, snapshot());
    }
  }
}

void MasacTrainer::run_episode(long long episode, MetricsRow& row) {
  GlobalState state =
      env_.reset(mix_seed(config_.seed, 4000000ULL + static_cast<uint64_t>(episode)));
  episode_pairs_.clear();
  const int n = config_.env.n_agents;

  double episode_return = 0.0;
  double jq_sum = 0.0, jpi_sum = 0.0, jl_sum = 0.0, dl_sum = 0.0;
  long long rounds = 0;
  bool done = false;
  bool success = false;

  while (!done) {
    std::vector<Eigen::VectorXd> obs(n);
    for (int i = 0; i < n; ++i) {
      obs[i] = env_.observe(state, i);
    }

    std::vector<AgentAction> actions(n);
    Eigen::VectorXd joint(2 * n);
    if (env_steps_ < config_.warmup_steps) {
      // Exploration warmup: uniform actions instead of the policy.
      for (int i = 0; i < n; ++i) {
        actions[i].accel = rng_.uniform(-1.0, 1.0);
        actions[i].yaw_accel = rng_.uniform(-1.0, 1.0);
        joint[2 * i] = actions[i].accel;
        joint[2 * i + 1] = actions[i].yaw_accel;
      }
    } else {
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d noise(rng_.normal(), rng_.normal());
        const ActionSample sample = sample_action(actors_[i], obs[i], noise);
        actions[i] = {sample.action[0], sample.action[1]};
        joint[2 * i] = sample.action[0];
        joint[2 * i + 1] = sample.action[1];
      }
    }

    const StepResult sr = env_.step(state, actions);
    episode_return += sr.reward;

    TransitionRecord record;
    record.s_flat = env_.flat_state(state);
    record.s_obs = obs;
    record.a = joint;
    record.r = sr.reward;
    record.s_next_flat = env_.flat_state(sr.state);
    record.s_next_obs.resize(n);
    for (int i = 0; i < n; ++i) {
      record.s_next_obs[i] = env_.observe(sr.state, i);
    }
    record.done = sr.done;
    record.episode_id = episode;
    record.step_idx = state.step_index;
    record.cost = env_.cost(sr.state);
    episode_pairs_.emplace_back(record.s_flat, joint);
    buffer_.add(std::move(record));
    ++env_steps_;

    if (env_steps_ >= config_.warmup_steps &&
        buffer_.size() >= static_cast<size_t>(config_.batch_size)) {
      for (int u = 0; u < config_.updates_per_step; ++u) {
        double jq = 0.0, jpi = 0.0, jl = 0.0, mean_dl = 0.0;
        gradient_round(jq, jpi, jl, mean_dl);
        jq_sum += jq;
        jpi_sum += jpi;
        jl_sum += jl;
        dl_sum += mean_dl;
        ++rounds;
      }
    }

    done = sr.done;
    if (done) {
      success = env_.success(sr.state);
    }
    state = sr.state;
  }

  row.episode = episode;
  row.env_steps = env_steps_;
  row.mean_return = episode_return;
  row.success = success ? 1 : 0;
  if (rounds > 0) {
    row.J_Q = jq_sum / static_cast<double>(rounds);
    row.J_pi = jpi_sum / static_cast<double>(rounds);
    row.J_L = jl_sum / static_cast<double>(rounds);
    row.mean_delta_l = dl_sum / static_cast<double>(rounds);
  }
  row.alpha = alpha();
  if (config_.use_lyapunov) {
    row.lyap_decrease_ratio =
        episode_pairs_.size() < 2
            ? 1.0
            : lyapunov_decrease_ratio(episode_pairs_, lyapunov_);
  }
}

UpdateBatch MasacTrainer::sample_batch() {
  const int B = config_.batch_size;
  const int n = config_.env.n_agents;
  const int state_dim = env_.flat_state_dim();

  UpdateBatch batch;
  batch.s_flat.resize(B, state_dim);
  batch.a.resize(B, 2 * n);
  batch.r.resize(B);
  batch.s_next_flat.resize(B, state_dim);
  batch.done.resize(B);
  batch.cost_now.resize(B);
  batch.l_targets = Eigen::VectorXd::Zero(B);
  batch.obs.resize(n);
  batch.obs_next.resize(n);
  for (int i = 0; i < n; ++i) {
    batch.obs[i].resize(B, env_.obs_dim(i));
    batch.obs_next[i].resize(B, env_.obs_dim(i));
  }

  for (int b = 0; b < B; ++b) {
    const size_t idx = buffer_.sample_index(rng_);
    const TransitionRecord& rec = buffer_.at(idx);
    batch.s_flat.row(b) = rec.s_flat.transpose();
    batch.a.row(b) = rec.a.transpose();
    batch.r[b] = rec.r;
    batch.s_next_flat.row(b) = rec.s_next_flat.transpose();
    batch.done[b] = rec.done ? 1.0 : 0.0;
    batch.cost_now[b] = env_.cost_from_flat(rec.s_flat);
    if (config_.use_lyapunov) {
      batch.l_targets[b] = buffer_.lookahead_cost_sum(idx, config_.lyap.T);
    }
    for (int i = 0; i < n; ++i) {
      batch.obs[i].row(b) = rec.s_obs[i].transpose();
      batch.obs_next[i].row(b) = rec.s_next_obs[i].transpose();
    }
  }
  return batch;
}

void MasacTrainer::gradient_round(double& jq, double& jpi, double& jl,
                                  double& mean_dl) {
  const int B = config_.batch_size;
  const int n = config_.env.n_agents;
  const int joint_dim = 2 * n;
  const double cur_alpha = alpha();

  UpdateBatch batch = sample_batch();

  // Next-state actions, sampled once and reused by the Bellman target and
  // (in Lyapunov runs) the constraint's l_next term.
  Eigen::MatrixXd next_noise(B, joint_dim);
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < joint_dim; ++c) {
      next_noise(b, c) = rng_.normal();
    }
  }
  Eigen::MatrixXd next_actions(B, joint_dim);
  Eigen::VectorXd next_joint_log_prob = Eigen::VectorXd::Zero(B);
  for (int i = 0; i < n; ++i) {
    const ActorForward f = actor_forward(
        actors_[i], batch.obs_next[i], next_noise.middleCols(2 * i, kActionDim));
    next_actions.middleCols(2 * i, kActionDim) = f.action;
    next_joint_log_prob += f.log_prob;
  }

  Eigen::MatrixXd next_sa(B, batch.s_next_flat.cols() + joint_dim);
  next_sa << batch.s_next_flat, next_actions;
  const Eigen::VectorXd next_qmin = q_min_batch(critic_, next_sa, true);
  Eigen::VectorXd y(B);
  for (int b = 0; b < B; ++b) {
    y[b] = bellman_target(batch.r[b], batch.done[b] != 0.0, next_qmin[b],
                          next_joint_log_prob[b], config_.gamma, cur_alpha);
  }

  Eigen::MatrixXd sa(B, batch.s_flat.cols() + joint_dim);
  sa << batch.s_flat, batch.a;
  jq = critic_update(critic_, critic_adam1_, critic_adam2_, sa, y, lr_critic_);

  Eigen::MatrixXd actor_noise(B, joint_dim);
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < joint_dim; ++c) {
      actor_noise(b, c) = rng_.normal();
    }
  }
  LyapConfig lyap_cfg = config_.lyap;
  lyap_cfg.lip_product = lip_product_;
  const ActorUpdateResult ar = actor_update(
      actors_, actor_adams_, critic_,
      config_.use_lyapunov ? &lyapunov_ : nullptr, batch, actor_noise,
      next_actions, cur_alpha, lyap_cfg, lr_actor_);
  jpi = ar.loss;
  mean_dl = ar.mean_delta_l;

  temperature_update(log_alpha_, alpha_adam_, ar.joint_log_prob,
                     config_.target_entropy * static_cast<double>(n),
                     lr_alpha_);

  soft_update(critic_, config_.tau);

  if (config_.use_lyapunov) {
    jl = lyapunov_update(lyapunov_, lyapunov_adam_, sa, batch.l_targets,
                         lr_lyapunov_);
  } else {
    jl = 0.0;
  }

  lr_actor_ *= config_.lr_decay;
  lr_critic_ *= config_.lr_decay;
  lr_alpha_ *= config_.lr_decay;
  lr_lyapunov_ *= config_.lr_decay;
}

}  // namespace lyapmarl
