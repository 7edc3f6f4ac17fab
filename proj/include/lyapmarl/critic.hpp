#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lyapmarl/nn.hpp"

namespace lyapmarl {

// Centralized twin soft-Q critics over (global state || joint action), each
// with a Polyak-averaged target copy.
struct TwinQCritic {
  FeedforwardNet q1;
  FeedforwardNet q2;
  FeedforwardNet q1_target;
  FeedforwardNet q2_target;
};

// Two hidden layers of 64 units; targets start as exact copies.
TwinQCritic make_twin_critic(int input_dim, Rng& rng);

// Scalar q_min over one (s, a) pair; selects the online or target heads.
double q_min(const TwinQCritic& c, const Eigen::VectorXd& s,
             const Eigen::VectorXd& a, bool use_target);

// Batched q_min over pre-joined rows (s || a). which_head receives, per row,
// 1 or 2 for the head attaining the minimum (ties go to q1) so callers can
// route gradients through the argmin branch.
Eigen::VectorXd q_min_batch(const TwinQCritic& c, const Eigen::MatrixXd& sa,
                            bool use_target,
                            std::vector<int>* which_head = nullptr,
                            ForwardTrace* trace1 = nullptr,
                            ForwardTrace* trace2 = nullptr);

// Soft Bellman backup: y = r + (1 - done) * gamma * (next_q_min -
// alpha * next_joint_log_prob).
double bellman_target(double r, bool done, double next_q_min,
                      double next_joint_log_prob, double gamma, double alpha);

// Polyak step on both target heads: target <- tau*online + (1-tau)*target.
void soft_update(TwinQCritic& c, double tau);

// J_Q and its exact parameter gradients: the loss is the sum over both
// heads of the per-head regression loss mean 1/2 (q_k - y)^2, so each
// gradient block is the derivative of the returned scalar. Pass null to
// skip gradient output.
double critic_loss_and_grads(const TwinQCritic& c, const Eigen::MatrixXd& sa,
                             const Eigen::VectorXd& y, NetGrads* grads1,
                             NetGrads* grads2);

// One regression round for both Q heads against a fixed target vector y:
// computes critic_loss_and_grads, then takes one Adam step per head.
// Returns the pre-step loss.
double critic_update(TwinQCritic& c, AdamState& adam1, AdamState& adam2,
                     const Eigen::MatrixXd& sa, const Eigen::VectorXd& y,
                     double lr);

// Candidate Lyapunov function over (global state || joint action) with a
// softplus output so L >= 0 everywhere. Hidden widths 64, 64, 16.
struct LyapunovCritic {
  FeedforwardNet net;
};

LyapunovCritic make_lyapunov_critic(int input_dim, Rng& rng);

double l_value(const LyapunovCritic& l, const Eigen::VectorXd& s,
               const Eigen::VectorXd& a);

// Batched softplus(net(s || a)) on pre-joined rows.
Eigen::VectorXd l_value_batch(const LyapunovCritic& l,
                              const Eigen::MatrixXd& sa);

// Finite-horizon regression target: sum of the first min(T + 1, available)
// entries of the cost tail starting at the transition itself.
double l_target(const std::vector<double>& costs, int T);

// J_L = mean of 1/2 (L - target)^2 with exact parameter gradients through
// the softplus head. Pass null to skip gradient output.
double lyapunov_loss_and_grads(const LyapunovCritic& l,
                               const Eigen::MatrixXd& sa,
                               const Eigen::VectorXd& targets,
                               NetGrads* grads);

// One regression round of the Lyapunov net toward targets; returns the
// pre-step loss.
double lyapunov_update(LyapunovCritic& l, AdamState& adam,
                       const Eigen::MatrixXd& sa,
                       const Eigen::VectorXd& targets, double lr);

// Constraint surrogate evaluated per transition:
// delta_l = l_next + lip_product * action_gap - l_curr +
//           cost_weight * cost_now.
double delta_l(double l_next, double l_curr, double lip_product,
               double action_gap, double cost_weight, double cost_now);

}  // namespace lyapmarl
