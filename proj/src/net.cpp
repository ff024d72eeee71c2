#include "trajpred/net.hpp"

#include <cmath>
#include <stdexcept>

namespace trajpred {

Mlp mlp_init(const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::runtime_error("mlp_init: need at least input and output sizes");
  for (int s : sizes) {
    if (s <= 0) throw std::runtime_error("mlp_init: layer sizes must be positive");
  }
  Mlp net;
  net.sizes = sizes;
  const int layers = static_cast<int>(sizes.size()) - 1;
  net.w.resize(layers);
  net.b.resize(layers);
  for (int l = 0; l < layers; ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    net.w[l].resize(static_cast<std::size_t>(out) * in);
    net.b[l].resize(out);
    for (auto& v : net.w[l]) v = (2.0 * rng.uniform() - 1.0) * bound;
    for (auto& v : net.b[l]) v = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return net;
}

std::size_t mlp_param_count(const Mlp& net) {
  std::size_t n = 0;
  for (int l = 0; l < net.layer_count(); ++l) n += net.w[l].size() + net.b[l].size();
  return n;
}

void mlp_get_params(const Mlp& net, double* out) {
  std::size_t k = 0;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double v : net.w[l]) out[k++] = v;
    for (double v : net.b[l]) out[k++] = v;
  }
}

void mlp_set_params(Mlp& net, const double* in) {
  std::size_t k = 0;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double& v : net.w[l]) v = in[k++];
    for (double& v : net.b[l]) v = in[k++];
  }
}

void mlp_axpy(Mlp& net, double alpha, const double* direction) {
  std::size_t k = 0;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double& v : net.w[l]) v += alpha * direction[k++];
    for (double& v : net.b[l]) v += alpha * direction[k++];
  }
}

std::vector<double> mlp_forward(const Mlp& net, const double* x) {
  std::vector<double> a(x, x + net.input_dim());
  std::vector<double> z;
  for (int l = 0; l < net.layer_count(); ++l) {
    const int in = net.sizes[l], out = net.sizes[l + 1];
    z.assign(out, 0.0);
    const double* w = net.w[l].data();
    for (int o = 0; o < out; ++o) {
      double acc = net.b[l][o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * a[i];
      z[o] = acc;
    }
    if (l + 1 < net.layer_count()) {
      for (int o = 0; o < out; ++o) z[o] = std::tanh(z[o]);
    }
    a.swap(z);
  }
  return a;
}

std::vector<double> mlp_backward(const Mlp& net, const double* x, const double* upstream,
                                 double* grad_acc) {
  const int layers = net.layer_count();
  // forward with cached activations (post-tanh; act[0] is the input)
  std::vector<std::vector<double>> act(layers + 1);
  act[0].assign(x, x + net.input_dim());
  for (int l = 0; l < layers; ++l) {
    const int in = net.sizes[l], out = net.sizes[l + 1];
    act[l + 1].assign(out, 0.0);
    const double* w = net.w[l].data();
    for (int o = 0; o < out; ++o) {
      double acc = net.b[l][o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * act[l][i];
      act[l + 1][o] = (l + 1 < layers) ? std::tanh(acc) : acc;
    }
  }

  // per-layer flat offsets
  std::vector<std::size_t> offset(layers);
  {
    std::size_t k = 0;
    for (int l = 0; l < layers; ++l) {
      offset[l] = k;
      k += net.w[l].size() + net.b[l].size();
    }
  }

  std::vector<double> delta(upstream, upstream + net.output_dim());
  for (int l = layers - 1; l >= 0; --l) {
    const int in = net.sizes[l], out = net.sizes[l + 1];
    if (l + 1 < layers) {
      // delta currently holds dL/da for a hidden activation; fold in tanh'
      for (int o = 0; o < out; ++o) {
        const double a = act[l + 1][o];
        delta[o] *= (1.0 - a * a);
      }
    }
    if (grad_acc != nullptr) {
      double* gw = grad_acc + offset[l];
      double* gb = gw + net.w[l].size();
      const double* prev = act[l].data();
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        double* grow = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) grow[i] += d * prev[i];
        gb[o] += d;
      }
    }
    std::vector<double> prev_delta(in, 0.0);
    const double* w = net.w[l].data();
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev_delta[i] += row[i] * d;
    }
    delta.swap(prev_delta);
  }
  return delta;  // dL/dx
}

std::vector<double> mlp_jvp(const Mlp& net, const double* x, const double* tangent) {
  const int layers = net.layer_count();
  std::vector<double> a(x, x + net.input_dim());
  std::vector<double> ta(net.input_dim(), 0.0);  // input is held fixed
  std::size_t k = 0;
  for (int l = 0; l < layers; ++l) {
    const int in = net.sizes[l], out = net.sizes[l + 1];
    std::vector<double> z(out, 0.0), tz(out, 0.0);
    const double* w = net.w[l].data();
    const double* tw = tangent + k;
    const double* tb = tangent + k + net.w[l].size();
    for (int o = 0; o < out; ++o) {
      double acc = net.b[l][o];
      double tacc = tb[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      const double* trow = tw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        acc += row[i] * a[i];
        tacc += trow[i] * a[i] + row[i] * ta[i];
      }
      z[o] = acc;
      tz[o] = tacc;
    }
    if (l + 1 < layers) {
      for (int o = 0; o < out; ++o) {
        const double t = std::tanh(z[o]);
        z[o] = t;
        tz[o] *= (1.0 - t * t);
      }
    }
    a.swap(z);
    ta.swap(tz);
    k += net.w[l].size() + net.b[l].size();
  }
  return ta;
}

AdamState make_adam(std::size_t param_count, double lr) {
  AdamState st;
  st.lr = lr;
  st.m.assign(param_count, 0.0);
  st.v.assign(param_count, 0.0);
  return st;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& st) {
  if (params.size() != grads.size() || params.size() != st.m.size()) {
    throw std::runtime_error("adam_step: size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
  }
  st.t += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i] * grads[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

void adam_step_net(Mlp& net, const std::vector<double>& grads, AdamState& st) {
  std::vector<double> params(mlp_param_count(net));
  mlp_get_params(net, params.data());
  adam_step(params, grads, st);
  mlp_set_params(net, params.data());
}

}  // namespace trajpred
