#pragma once

#include <cstddef>
#include <vector>

#include "trajpred/rng.hpp"

namespace trajpred {

// Fully connected net, tanh on hidden layers, linear output. A single-layer
// configuration therefore degenerates to an affine map. Weights are row-major
// [out x in]; flat parameter layout is (w0, b0, w1, b1, ...).
struct Mlp {
  std::vector<int> sizes;                 // at least {in, out}
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int layer_count() const { return static_cast<int>(w.size()); }
};

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
Mlp mlp_init(const std::vector<int>& sizes, Rng& rng);

std::size_t mlp_param_count(const Mlp& net);
void mlp_get_params(const Mlp& net, double* out);
void mlp_set_params(Mlp& net, const double* in);
void mlp_axpy(Mlp& net, double alpha, const double* direction);  // params += alpha * direction

std::vector<double> mlp_forward(const Mlp& net, const double* x);

// Exact reverse-mode pass. Accumulates parameter gradients (flat layout) into
// grad_acc and returns the gradient with respect to the input.
std::vector<double> mlp_backward(const Mlp& net, const double* x, const double* upstream,
                                 double* grad_acc);

// Forward tangent propagation: directional derivative of the output with
// respect to the parameters along `tangent` (flat layout), at fixed input.
std::vector<double> mlp_jvp(const Mlp& net, const double* x, const double* tangent);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  std::vector<double> m;
  std::vector<double> v;
};

AdamState make_adam(std::size_t param_count, double lr);

// One descent step: params -= lr * mhat / (sqrt(vhat) + eps).
// Throws on non-finite gradient entries.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& st);

// Convenience: flatten, step, write back.
void adam_step_net(Mlp& net, const std::vector<double>& grads, AdamState& st);

}  // namespace trajpred
