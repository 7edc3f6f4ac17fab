#include "lyapmarl/critic.hpp"

#include <cmath>
#include <stdexcept>

namespace lyapmarl {

TwinQCritic make_twin_critic(int input_dim, Rng& rng) {
  TwinQCritic c;
  c.q1 = make_net({input_dim, 64, 64, 1}, rng);
  c.q2 = make_net({input_dim, 64, 64, 1}, rng);
  c.q1_target = c.q1;
  c.q2_target = c.q2;
  return c;
}

double q_min(const TwinQCritic& c, const Eigen::VectorXd& s,
             const Eigen::VectorXd& a, bool use_target) {
  Eigen::VectorXd sa(s.size() + a.size());
  sa << s, a;
  const FeedforwardNet& h1 = use_target ? c.q1_target : c.q1;
  const FeedforwardNet& h2 = use_target ? c.q2_target : c.q2;
  if (sa.size() != h1.input_dim()) {
    throw std::invalid_argument("q_min: state/action dimension mismatch");
  }
  return std::min(forward_one(h1, sa)[0], forward_one(h2, sa)[0]);
}

Eigen::VectorXd q_min_batch(const TwinQCritic& c, const Eigen::MatrixXd& sa,
                            bool use_target, std::vector<int>* which_head,
                            ForwardTrace* trace1, ForwardTrace* trace2) {
  const FeedforwardNet& h1 = use_target ? c.q1_target : c.q1;
  const FeedforwardNet& h2 = use_target ? c.q2_target : c.q2;
  const Eigen::VectorXd v1 = forward(h1, sa, trace1).col(0);
  const Eigen::VectorXd v2 = forward(h2, sa, trace2).col(0);
  Eigen::VectorXd out(sa.rows());
  if (which_head != nullptr) {
    which_head->assign(sa.rows(), 1);
  }
  for (Eigen::Index b = 0; b < sa.rows(); ++b) {
    if (v2[b] < v1[b]) {
      out[b] = v2[b];
      if (which_head != nullptr) {
        (*which_head)[b] = 2;
      }
    } else {
      out[b] = v1[b];
    }
  }
  return out;
}

double bellman_target(double r, bool done, double next_q_min,
                      double next_joint_log_prob, double gamma, double alpha) {
  if (done) {
    return r;
  }
  return r + gamma * (next_q_min - alpha * next_joint_log_prob);
}

void soft_update(TwinQCritic& c, double tau) {
  soft_update(c.q1, c.q1_target, tau);
  soft_update(c.q2, c.q2_target, tau);
}

double critic_loss_and_grads(const TwinQCritic& c, const Eigen::MatrixXd& sa,
                             const Eigen::VectorXd& y, NetGrads* grads1,
                             NetGrads* grads2) {
  const double batch = static_cast<double>(sa.rows());

  ForwardTrace trace1;
  const Eigen::VectorXd v1 = forward(c.q1, sa, &trace1).col(0);
  ForwardTrace trace2;
  const Eigen::VectorXd v2 = forward(c.q2, sa, &trace2).col(0);

  const Eigen::VectorXd d1 = v1 - y;
  const Eigen::VectorXd d2 = v2 - y;
  const double loss = 0.5 * (d1.squaredNorm() + d2.squaredNorm()) / batch;
  if (!std::isfinite(loss)) {
    throw std::runtime_error("critic update produced non-finite loss J_Q");
  }

  if (grads1 != nullptr) {
    backward(c.q1, trace1, (d1 / batch).eval(), *grads1);
  }
  if (grads2 != nullptr) {
    backward(c.q2, trace2, (d2 / batch).eval(), *grads2);
  }
  return loss;
}

double critic_update(TwinQCritic& c, AdamState& adam1, AdamState& adam2,
                     const Eigen::MatrixXd& sa, const Eigen::VectorXd& y,
                     double lr) {
  NetGrads g1 = zero_grads(c.q1);
  NetGrads g2 = zero_grads(c.q2);
  const double loss = critic_loss_and_grads(c, sa, y, &g1, &g2);
  adam_step(c.q1, g1, adam1, lr);
  adam_step(c.q2, g2, adam2, lr);
  return loss;
}

LyapunovCritic make_lyapunov_critic(int input_dim, Rng& rng) {
  LyapunovCritic l;
  l.net = make_net({input_dim, 64, 64, 16, 1}, rng);
  return l;
}

double l_value(const LyapunovCritic& l, const Eigen::VectorXd& s,
               const Eigen::VectorXd& a) {
  Eigen::VectorXd sa(s.size() + a.size());
  sa << s, a;
  if (sa.size() != l.net.input_dim()) {
    throw std::invalid_argument("l_value: state/action dimension mismatch");
  }
  return softplus(forward_one(l.net, sa)[0]);
}

Eigen::VectorXd l_value_batch(const LyapunovCritic& l,
                              const Eigen::MatrixXd& sa) {
  Eigen::VectorXd raw = forward(l.net, sa).col(0);
  for (Eigen::Index b = 0; b < raw.size(); ++b) {
    raw[b] = softplus(raw[b]);
  }
  return raw;
}

double l_target(const std::vector<double>& costs, int T) {
  if (costs.empty()) {
    throw std::invalid_argument("l_target: empty cost list");
  }
  const size_t take = std::min(costs.size(), static_cast<size_t>(T) + 1);
  double total = 0.0;
  for (size_t i = 0; i < take; ++i) {
    total += costs[i];
  }
  return total;
}

double lyapunov_loss_and_grads(const LyapunovCritic& l,
                               const Eigen::MatrixXd& sa,
                               const Eigen::VectorXd& targets,
                               NetGrads* grads) {
  const double batch = static_cast<double>(sa.rows());
  ForwardTrace trace;
  const Eigen::VectorXd raw = forward(l.net, sa, &trace).col(0);
  Eigen::VectorXd grad_raw(raw.size());
  double loss = 0.0;
  for (Eigen::Index b = 0; b < raw.size(); ++b) {
    const double diff = softplus(raw[b]) - targets[b];
    loss += 0.5 * diff * diff;
    grad_raw[b] = diff * sigmoid(raw[b]) / batch;
  }
  loss /= batch;
  if (!std::isfinite(loss)) {
    throw std::runtime_error("Lyapunov update produced non-finite loss J_L");
  }
  if (grads != nullptr) {
    backward(l.net, trace, grad_raw, *grads);
  }
  return loss;
}

double lyapunov_update(LyapunovCritic& l, AdamState& adam,
                       const Eigen::MatrixXd& sa,
                       const Eigen::VectorXd& targets, double lr) {
  NetGrads grads = zero_grads(l.net);
  const double loss = lyapunov_loss_and_grads(l, sa, targets, &grads);
  adam_step(l.net, grads, adam, lr);
  return loss;
}

double delta_l(double l_next, double l_curr, double lip_product,
               double action_gap, double cost_weight, double cost_now) {
  return l_next + lip_product * action_gap - l_curr + cost_weight * cost_now;
}

}  // namespace lyapmarl
