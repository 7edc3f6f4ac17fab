#include "lyapmarl/nn.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace lyapmarl {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void write_value(std::ostream& os, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

double read_value(std::istream& is) {
  double v;
  if (!(is >> v)) {
    throw std::runtime_error("network deserialization: truncated stream");
  }
  return v;
}

}  // namespace

FeedforwardNet make_net(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) {
    throw std::invalid_argument("make_net: need at least input and output dims");
  }
  FeedforwardNet net;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const int in = dims[i];
    const int out = dims[i + 1];
    Layer layer;
    layer.W.resize(out, in);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) {
        layer.W(r, c) = rng.uniform(-bound, bound);
      }
    }
    layer.b = Eigen::VectorXd::Zero(out);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Eigen::MatrixXd forward(const FeedforwardNet& net, const Eigen::MatrixXd& x,
                        ForwardTrace* trace) {
  if (x.cols() != net.input_dim()) {
    throw std::invalid_argument("forward: input width mismatch");
  }
  if (trace != nullptr) {
    trace->input = x;
    trace->post.clear();
    trace->post.reserve(net.layers.size());
  }
  Eigen::MatrixXd h = x;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& layer = net.layers[i];
    Eigen::MatrixXd z =
        (h * layer.W.transpose()).rowwise() + layer.b.transpose();
    if (i + 1 < net.layers.size()) {
      z = z.cwiseMax(0.0);
    }
    if (trace != nullptr) {
      trace->post.push_back(z);
    }
    h = std::move(z);
  }
  return h;
}

Eigen::VectorXd forward_one(const FeedforwardNet& net,
                            const Eigen::VectorXd& x) {
  Eigen::MatrixXd row = x.transpose();
  return forward(net, row).row(0).transpose();
}

NetGrads zero_grads(const FeedforwardNet& net) {
  NetGrads grads;
  grads.g.reserve(net.layers.size());
  for (const Layer& layer : net.layers) {
    Layer g;
    g.W = Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols());
    g.b = Eigen::VectorXd::Zero(layer.b.size());
    grads.g.push_back(std::move(g));
  }
  return grads;
}

void scale_grads(NetGrads& grads, double s) {
  for (Layer& g : grads.g) {
    g.W *= s;
    g.b *= s;
  }
}

Eigen::MatrixXd backward(const FeedforwardNet& net, const ForwardTrace& trace,
                         const Eigen::MatrixXd& grad_out, NetGrads& grads) {
  if (trace.post.size() != net.layers.size()) {
    throw std::invalid_argument("backward: trace does not match network");
  }
  Eigen::MatrixXd delta = grad_out;
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    if (static_cast<size_t>(i) + 1 < net.layers.size()) {
      // Hidden layer: gate by the ReLU mask. post > 0 iff pre-activation > 0,
      // and the subgradient at 0 is 0, so the strict comparison is exact.
      delta = delta.cwiseProduct(
          (trace.post[i].array() > 0.0).cast<double>().matrix());
    }
    const Eigen::MatrixXd& prev =
        (i == 0) ? trace.input : trace.post[i - 1];
    grads.g[i].W.noalias() += delta.transpose() * prev;
    grads.g[i].b += delta.colwise().sum().transpose();
    delta = delta * net.layers[i].W;
  }
  return delta;
}

AdamState make_adam(const FeedforwardNet& net) {
  AdamState state;
  state.m.reserve(net.layers.size());
  state.v.reserve(net.layers.size());
  for (const Layer& layer : net.layers) {
    Layer zero;
    zero.W = Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols());
    zero.b = Eigen::VectorXd::Zero(layer.b.size());
    state.m.push_back(zero);
    state.v.push_back(std::move(zero));
  }
  return state;
}

void adam_step(FeedforwardNet& net, const NetGrads& grads, AdamState& state,
               double lr) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
  for (size_t i = 0; i < net.layers.size(); ++i) {
    state.m[i].W = kAdamBeta1 * state.m[i].W + (1.0 - kAdamBeta1) * grads.g[i].W;
    state.m[i].b = kAdamBeta1 * state.m[i].b + (1.0 - kAdamBeta1) * grads.g[i].b;
    state.v[i].W = kAdamBeta2 * state.v[i].W +
                   (1.0 - kAdamBeta2) * grads.g[i].W.cwiseProduct(grads.g[i].W);
    state.v[i].b = kAdamBeta2 * state.v[i].b +
                   (1.0 - kAdamBeta2) * grads.g[i].b.cwiseProduct(grads.g[i].b);
    net.layers[i].W.array() -=
        lr * (state.m[i].W.array() / bc1) /
        ((state.v[i].W.array() / bc2).sqrt() + kAdamEps);
    net.layers[i].b.array() -=
        lr * (state.m[i].b.array() / bc1) /
        ((state.v[i].b.array() / bc2).sqrt() + kAdamEps);
  }
}

void adam_step_scalar(double& param, double grad, ScalarAdam& state,
                      double lr) {
  state.t += 1;
  state.m = kAdamBeta1 * state.m + (1.0 - kAdamBeta1) * grad;
  state.v = kAdamBeta2 * state.v + (1.0 - kAdamBeta2) * grad * grad;
  const double mhat =
      state.m / (1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t)));
  const double vhat =
      state.v / (1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t)));
  param -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
}

void soft_update(const FeedforwardNet& source, FeedforwardNet& target,
                 double tau) {
  if (source.layers.size() != target.layers.size()) {
    throw std::invalid_argument("soft_update: mismatched architectures");
  }
  for (size_t i = 0; i < source.layers.size(); ++i) {
    target.layers[i].W = tau * source.layers[i].W + (1.0 - tau) * target.layers[i].W;
    target.layers[i].b = tau * source.layers[i].b + (1.0 - tau) * target.layers[i].b;
  }
}

void write_net(std::ostream& os, const FeedforwardNet& net) {
  os << "net " << net.layers.size() << "\n";
  for (const Layer& layer : net.layers) {
    os << "layer " << layer.W.rows() << " " << layer.W.cols() << "\n";
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) {
        if (c > 0) os << " ";
        write_value(os, layer.W(r, c));
      }
      os << "\n";
    }
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) {
      if (r > 0) os << " ";
      write_value(os, layer.b(r));
    }
    os << "\n";
  }
}

FeedforwardNet read_net(std::istream& is) {
  std::string tag;
  size_t n_layers = 0;
  if (!(is >> tag >> n_layers) || tag != "net") {
    throw std::runtime_error("network deserialization: missing net header");
  }
  FeedforwardNet net;
  for (size_t i = 0; i < n_layers; ++i) {
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> tag >> rows >> cols) || tag != "layer") {
      throw std::runtime_error("network deserialization: missing layer header");
    }
    Layer layer;
    layer.W.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        layer.W(r, c) = read_value(is);
      }
    }
    layer.b.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      layer.b(r) = read_value(is);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

double softplus(double z) {
  if (z > 0.0) {
    return z + std::log1p(std::exp(-z));
  }
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace lyapmarl
