#include "lyapmarl/actor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lyapmarl {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

// Per-element log density of the squashed sample, given the clamped log
// sigma, the noise realization, and the pre-squash value's tanh.
double squashed_log_density(double log_sigma, double noise, double tanh_u) {
  const double denom = 1.0 - tanh_u * tanh_u + kSquashEps;
  return -0.5 * kLogTwoPi - log_sigma - 0.5 * noise * noise - std::log(denom);
}

}  // namespace

ActorPolicy make_actor(int obs_dim, Rng& rng) {
  ActorPolicy p;
  p.net = make_net({obs_dim, 64, 64, 2 * kActionDim}, rng);
  return p;
}

ActorForward actor_forward(const ActorPolicy& p, const Eigen::MatrixXd& obs,
                           const Eigen::MatrixXd& noise) {
  if (noise.rows() != obs.rows() || noise.cols() != kActionDim) {
    throw std::invalid_argument("actor_forward: noise shape mismatch");
  }
  ActorForward f;
  const Eigen::MatrixXd head = forward(p.net, obs, &f.trace);
  if (!head.allFinite()) {
    throw std::runtime_error("actor network produced non-finite output");
  }
  const Eigen::Index batch = obs.rows();
  f.mu = head.leftCols(kActionDim);
  f.log_sigma = head.rightCols(kActionDim)
                    .cwiseMax(kLogSigmaMin)
                    .cwiseMin(kLogSigmaMax);
  f.sigma = f.log_sigma.array().exp().matrix();
  f.noise = noise;
  f.u = f.mu + f.sigma.cwiseProduct(noise);
  f.action = f.u.array().tanh().matrix();
  f.log_prob = Eigen::VectorXd::Zero(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int k = 0; k < kActionDim; ++k) {
      f.log_prob[b] +=
          squashed_log_density(f.log_sigma(b, k), noise(b, k), f.action(b, k));
    }
  }
  return f;
}

void actor_backward(const ActorPolicy& p, const ActorForward& f,
                    const Eigen::MatrixXd& grad_action,
                    const Eigen::VectorXd& grad_log_prob, NetGrads& grads) {
  const Eigen::Index batch = f.mu.rows();
  Eigen::MatrixXd head_grad(batch, 2 * kActionDim);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int k = 0; k < kActionDim; ++k) {
      const double t = f.action(b, k);
      const double s2 = 1.0 - t * t;           // d tanh(u) / du
      const double denom = s2 + kSquashEps;
      const double sn = f.sigma(b, k) * f.noise(b, k);  // du / d log_sigma
      // d log_prob / du comes from the squash correction only: the Gaussian
      // factor, written in terms of the fixed noise, does not depend on u.
      const double dlp_du = 2.0 * t * s2 / denom;
      const double ga = grad_action(b, k);
      const double gl = grad_log_prob[b];
      head_grad(b, k) = ga * s2 + gl * dlp_du;
      const double dl_dlogsigma = ga * s2 * sn + gl * (dlp_du * sn - 1.0);
      // The clamp on log sigma has zero gradient outside its open interval.
      const double raw = f.log_sigma(b, k);
      const bool active = raw > kLogSigmaMin && raw < kLogSigmaMax;
      head_grad(b, kActionDim + k) = active ? dl_dlogsigma : 0.0;
    }
  }
  backward(p.net, f.trace, head_grad, grads);
}

ActionSample sample_action(const ActorPolicy& p, const Eigen::VectorXd& obs,
                           const Eigen::Vector2d& noise) {
  Eigen::MatrixXd obs_row = obs.transpose();
  Eigen::MatrixXd noise_row = noise.transpose();
  const ActorForward f = actor_forward(p, obs_row, noise_row);
  ActionSample out;
  out.action = f.action.row(0).transpose();
  out.log_prob = f.log_prob[0];
  return out;
}

Eigen::Vector2d deterministic_action(const ActorPolicy& p,
                                     const Eigen::VectorXd& obs) {
  const Eigen::VectorXd head = forward_one(p.net, obs);
  if (!head.allFinite()) {
    throw std::runtime_error("actor network produced non-finite output");
  }
  return head.head(kActionDim).array().tanh();
}

double log_prob_from_u(const ActorPolicy& p, const Eigen::VectorXd& obs,
                       const Eigen::Vector2d& u) {
  const Eigen::VectorXd head = forward_one(p.net, obs);
  if (!head.allFinite()) {
    throw std::runtime_error("actor network produced non-finite output");
  }
  double lp = 0.0;
  for (int k = 0; k < kActionDim; ++k) {
    const double mu = head[k];
    const double log_sigma = std::min(std::max(head[kActionDim + k], kLogSigmaMin),
                                      kLogSigmaMax);
    const double sigma = std::exp(log_sigma);
    const double noise = (u[k] - mu) / sigma;
    lp += squashed_log_density(log_sigma, noise, std::tanh(u[k]));
  }
  return lp;
}

double joint_log_prob(const std::vector<ActorPolicy>& policies,
                      const std::vector<Eigen::VectorXd>& obs_list,
                      const std::vector<Eigen::Vector2d>& actions_u) {
  if (policies.size() != obs_list.size() ||
      policies.size() != actions_u.size()) {
    throw std::invalid_argument("joint_log_prob: length mismatch (" +
                                std::to_string(policies.size()) + " policies, " +
                                std::to_string(obs_list.size()) + " observations, " +
                                std::to_string(actions_u.size()) + " actions)");
  }
  double total = 0.0;
  for (size_t i = 0; i < policies.size(); ++i) {
    total += log_prob_from_u(policies[i], obs_list[i], actions_u[i]);
  }
  return total;
}

}  // namespace lyapmarl
