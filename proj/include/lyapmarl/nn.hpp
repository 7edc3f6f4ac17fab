#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "lyapmarl/rng.hpp"

namespace lyapmarl {

// Fully connected network with ReLU hidden activations and a linear output
// layer. All math is double precision. Batches are row-major: one sample per
// row, so a layer with weight W (out x in) maps X (batch x in) to
// X * W^T + b^T.
struct Layer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

struct FeedforwardNet {
  std::vector<Layer> layers;

  int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().W.rows()); }
};

// dims = {input, hidden..., output}. Weights are drawn uniformly from
// [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases start at zero.
FeedforwardNet make_net(const std::vector<int>& dims, Rng& rng);

// Post-activation values kept around for the backward pass. post[i] is the
// output of layer i (after ReLU for hidden layers, raw for the last one).
struct ForwardTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> post;
};

// Forward pass over a batch. When trace is non-null it is filled so that
// backward() can be called afterwards.
Eigen::MatrixXd forward(const FeedforwardNet& net, const Eigen::MatrixXd& x,
                        ForwardTrace* trace = nullptr);

// Convenience single-sample forward.
Eigen::VectorXd forward_one(const FeedforwardNet& net,
                            const Eigen::VectorXd& x);

struct NetGrads {
  std::vector<Layer> g;
};

NetGrads zero_grads(const FeedforwardNet& net);
void scale_grads(NetGrads& grads, double s);

// Backpropagates grad_out (batch x out) through the trace, accumulating
// parameter gradients into grads, and returns the gradient with respect to
// the network input (batch x in). The ReLU subgradient at exactly zero is
// taken as zero.
Eigen::MatrixXd backward(const FeedforwardNet& net, const ForwardTrace& trace,
                         const Eigen::MatrixXd& grad_out, NetGrads& grads);

// Adam with the usual bias correction. Moments live per parameter tensor.
struct AdamState {
  std::vector<Layer> m;
  std::vector<Layer> v;
  long long t = 0;
};

AdamState make_adam(const FeedforwardNet& net);
void adam_step(FeedforwardNet& net, const NetGrads& grads, AdamState& state,
               double lr);

// Scalar Adam used for the entropy temperature.
struct ScalarAdam {
  double m = 0.0;
  double v = 0.0;
  long long t = 0;
};

void adam_step_scalar(double& param, double grad, ScalarAdam& state,
                      double lr);

// Polyak averaging: target <- tau * source + (1 - tau) * target.
void soft_update(const FeedforwardNet& source, FeedforwardNet& target,
                 double tau);

// Textual, lossless serialization (17 significant digits per value).
void write_net(std::ostream& os, const FeedforwardNet& net);
FeedforwardNet read_net(std::istream& is);

// Numerically stable softplus and its derivative, used by the Lyapunov head.
double softplus(double z);
double sigmoid(double z);

}  // namespace lyapmarl
