#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lyapmarl/nn.hpp"

namespace lyapmarl {

// Action dimension per agent: (accel, yaw_accel).
inline constexpr int kActionDim = 2;

// Clamp range for the log standard deviation head and the squash-correction
// epsilon. Fixed constants so runs are reproducible.
inline constexpr double kLogSigmaMin = -20.0;
inline constexpr double kLogSigmaMax = 2.0;
inline constexpr double kSquashEps = 1e-6;

// Diagonal-Gaussian policy head squashed through tanh. The network maps an
// observation to (mu[2], log sigma[2]); sampling uses the reparameterization
// u = mu + sigma * noise, action = tanh(u).
struct ActorPolicy {
  FeedforwardNet net;
};

// Actor network for an observation of the given width: two hidden layers of
// 64 units, output (mu, log sigma).
ActorPolicy make_actor(int obs_dim, Rng& rng);

// Everything the backward pass needs from one batched policy evaluation.
// Matrices are batch x kActionDim.
struct ActorForward {
  ForwardTrace trace;
  Eigen::MatrixXd mu;
  Eigen::MatrixXd log_sigma;  // after clamping
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd noise;
  Eigen::MatrixXd u;       // pre-squash
  Eigen::MatrixXd action;  // tanh(u)
  Eigen::VectorXd log_prob;
};

// Batched reparameterized sampling: obs is batch x obs_dim, noise is
// batch x kActionDim of standard normals. Throws if the network emits a
// non-finite head value.
ActorForward actor_forward(const ActorPolicy& p, const Eigen::MatrixXd& obs,
                           const Eigen::MatrixXd& noise);

// Accumulates dLoss/dparameters into grads given the upstream gradients with
// respect to the sampled action (batch x kActionDim) and the per-row log
// probability. Gradients flow through mu and sigma along the reparameterized
// path; the noise is a constant.
void actor_backward(const ActorPolicy& p, const ActorForward& f,
                    const Eigen::MatrixXd& grad_action,
                    const Eigen::VectorXd& grad_log_prob, NetGrads& grads);

struct ActionSample {
  Eigen::Vector2d action;
  double log_prob = 0.0;
};

// Single-observation convenience wrapper around actor_forward.
ActionSample sample_action(const ActorPolicy& p, const Eigen::VectorXd& obs,
                           const Eigen::Vector2d& noise);

// Greedy execution policy: tanh of the mean head.
Eigen::Vector2d deterministic_action(const ActorPolicy& p,
                                     const Eigen::VectorXd& obs);

// Exact log density of a squashed sample given its pre-squash value u.
double log_prob_from_u(const ActorPolicy& p, const Eigen::VectorXd& obs,
                       const Eigen::Vector2d& u);

// Sum over agents of log pi_i(a_i | s_i), evaluated at pre-squash values.
double joint_log_prob(const std::vector<ActorPolicy>& policies,
                      const std::vector<Eigen::VectorXd>& obs_list,
                      const std::vector<Eigen::Vector2d>& actions_u);

}  // namespace lyapmarl
