#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "lyapmarl/critic.hpp"
#include "lyapmarl/env.hpp"

namespace lyapmarl {

// Sampled lower bound on a Lipschitz constant: the max over n_samples pairs
// of ||f(x + d) - f(x)|| / ||d|| with x drawn by sample_input and d a
// Gaussian perturbation of the given scale.
double estimate_lipschitz(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(Rng&)>& sample_input, int n_samples,
    double scale, uint64_t seed);

// l_f: sensitivity of one dynamics step to the joint action, probed at
// random states. Under the flat-state encoding only the velocity slots
// respond, so the analytic value is dt (saturation can only shrink it).
double estimate_dynamics_action_lipschitz(const RendezvousEnv& env,
                                          int n_samples, double scale,
                                          uint64_t seed);

// l_L: sensitivity of the Lyapunov net to the flattened global state at a
// fixed random action per sample.
double estimate_lyapunov_state_lipschitz(const LyapunovCritic& lyapunov,
                                         const RendezvousEnv& env,
                                         int n_samples, double scale,
                                         uint64_t seed);

}  // namespace lyapmarl
