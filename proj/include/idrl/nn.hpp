#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "idrl/matrix.hpp"
#include "idrl/rng.hpp"

namespace idrl {

// Probability clamp applied before any log; BCE is undefined at 0/1.
inline constexpr double kProbClamp = 1e-7;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clamp_prob(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

enum class Activation { Relu, Sigmoid, Identity };

struct DenseLayer {
  Matrix weight;             // in_dim x out_dim
  std::vector<double> bias;  // out_dim
  Activation activation = Activation::Identity;

  std::size_t in_dim() const { return weight.rows; }
  std::size_t out_dim() const { return weight.cols; }
};

using Mlp = std::vector<DenseLayer>;

// Glorot-style init: weights uniform in +-sqrt(6/(fan_in+fan_out)), zero bias.
inline DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.weight = Matrix(in, out);
  double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : layer.weight.data) w = rng.uniform(-limit, limit);
  layer.bias.assign(out, 0.0);
  layer.activation = act;
  return layer;
}

inline Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& hidden,
                    std::size_t out, Activation hidden_act, Activation out_act,
                    Rng& rng) {
  Mlp net;
  std::size_t prev = in;
  for (std::size_t width : hidden) {
    net.push_back(make_dense(prev, width, hidden_act, rng));
    prev = width;
  }
  net.push_back(make_dense(prev, out, out_act, rng));
  return net;
}

inline void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::Relu:
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Sigmoid:
      for (double& v : z.data) v = sigmoid(v);
      break;
    case Activation::Identity:
      break;
  }
}

// Activations per layer: acts[0] is the input, acts[i] the output of layer
// i-1. Post-activation values are enough to rebuild every local derivative.
struct MlpTrace {
  std::vector<Matrix> acts;
};

inline Matrix forward_mlp(const Mlp& layers, const Matrix& input,
                          MlpTrace* trace = nullptr) {
  if (layers.empty()) throw ConfigError("forward_mlp: empty network");
  if (input.cols != layers.front().in_dim())
    throw ConfigError("forward_mlp: input has " + std::to_string(input.cols) +
                      " columns, first layer expects " +
                      std::to_string(layers.front().in_dim()));
  if (trace) {
    trace->acts.clear();
    trace->acts.reserve(layers.size() + 1);
    trace->acts.push_back(input);
  }
  Matrix current = input;
  for (const DenseLayer& layer : layers) {
    if (current.cols != layer.in_dim())
      throw ConfigError("forward_mlp: layer dimensions inconsistent");
    Matrix z = matmul(current, layer.weight);
    for (std::size_t i = 0; i < z.rows; ++i)
      for (std::size_t j = 0; j < z.cols; ++j) z(i, j) += layer.bias[j];
    apply_activation(layer.activation, z);
    current = std::move(z);
    if (trace) trace->acts.push_back(current);
  }
  return current;
}

struct MlpGrads {
  std::vector<Matrix> d_weight;
  std::vector<std::vector<double>> d_bias;
  Matrix d_input;
};

// Derivative of the activation expressed through the activated value.
inline double activation_grad(Activation act, double activated) {
  switch (act) {
    case Activation::Relu:
      return activated > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid:
      return activated * (1.0 - activated);
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

// Exact reverse-mode gradients for the composed dense chain. `upstream` is
// dLoss/dOutput with the same shape as the forward output.
inline MlpGrads backward_mlp(const Mlp& layers, const MlpTrace& trace,
                             const Matrix& upstream) {
  if (trace.acts.size() != layers.size() + 1)
    throw ConfigError("backward_mlp: trace does not match network");
  const Matrix& out = trace.acts.back();
  if (upstream.rows != out.rows || upstream.cols != out.cols)
    throw ConfigError("backward_mlp: upstream gradient shape mismatch");

  MlpGrads grads;
  grads.d_weight.resize(layers.size());
  grads.d_bias.resize(layers.size());

  Matrix d_act = upstream;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const DenseLayer& layer = layers[li];
    const Matrix& activated = trace.acts[li + 1];
    const Matrix& input = trace.acts[li];

    Matrix d_z = std::move(d_act);
    for (std::size_t i = 0; i < d_z.size(); ++i)
      d_z.data[i] *= activation_grad(layer.activation, activated.data[i]);

    grads.d_weight[li] = matmul_tn(input, d_z);
    std::vector<double>& db = grads.d_bias[li];
    db.assign(layer.out_dim(), 0.0);
    for (std::size_t i = 0; i < d_z.rows; ++i)
      for (std::size_t j = 0; j < d_z.cols; ++j) db[j] += d_z(i, j);

    d_act = matmul_nt(d_z, layer.weight);
  }
  grads.d_input = std::move(d_act);
  return grads;
}

struct ScalarLoss {
  double value = 0.0;
  std::vector<double> grad;
};

// value = (1/n) sum (pred - target)^2, grad wrt pred.
inline ScalarLoss mse_loss(std::span<const double> pred,
                           std::span<const double> target) {
  if (pred.empty()) throw std::invalid_argument("mse_loss: empty input");
  if (pred.size() != target.size())
    throw std::invalid_argument("mse_loss: length mismatch");
  ScalarLoss loss;
  loss.grad.resize(pred.size());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double diff = pred[i] - target[i];
    loss.value += diff * diff / n;
    loss.grad[i] = 2.0 * diff / n;
  }
  return loss;
}

// positive: mean log p.  negative: mean log(1-p).  Probabilities are clamped
// to [kProbClamp, 1-kProbClamp] and the gradient is taken at the clamped
// values.
inline ScalarLoss bce_terms(std::span<const double> p, bool positive) {
  if (p.empty()) throw std::invalid_argument("bce_terms: empty input");
  ScalarLoss loss;
  loss.grad.resize(p.size());
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double pc = clamp_prob(p[i]);
    if (positive) {
      loss.value += std::log(pc) / n;
      loss.grad[i] = 1.0 / (n * pc);
    } else {
      loss.value += std::log(1.0 - pc) / n;
      loss.grad[i] = -1.0 / (n * (1.0 - pc));
    }
  }
  return loss;
}

// Adaptive-moment optimizer over a flat list of parameter arrays.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

inline void adam_step(const std::vector<std::vector<double>*>& params,
                      const std::vector<const std::vector<double>*>& grads,
                      AdamState& state) {
  if (params.size() != grads.size())
    throw ConfigError("adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i]->size(), 0.0);
      state.v[i].assign(params[i]->size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw ConfigError("adam_step: state does not match parameter list");

  state.step += 1;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double>& p = *params[i];
    const std::vector<double>& g = *grads[i];
    if (p.size() != g.size() || p.size() != state.m[i].size())
      throw ConfigError("adam_step: shape mismatch in parameter " + std::to_string(i));
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      double mhat = m[j] / corr1;
      double vhat = v[j] / corr2;
      p[j] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.epsilon);
    }
  }
}

// Parameter arrays of an MLP in a fixed order (weight, bias per layer).
inline std::vector<std::vector<double>*> mlp_param_arrays(Mlp& net) {
  std::vector<std::vector<double>*> out;
  out.reserve(net.size() * 2);
  for (DenseLayer& layer : net) {
    out.push_back(&layer.weight.data);
    out.push_back(&layer.bias);
  }
  return out;
}

inline std::vector<const std::vector<double>*> mlp_grad_arrays(const MlpGrads& grads) {
  std::vector<const std::vector<double>*> out;
  out.reserve(grads.d_weight.size() * 2);
  for (std::size_t i = 0; i < grads.d_weight.size(); ++i) {
    out.push_back(&grads.d_weight[i].data);
    out.push_back(&grads.d_bias[i]);
  }
  return out;
}

}  // namespace idrl
