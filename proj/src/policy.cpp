#include "trajpred/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "trajpred/json_io.hpp"

namespace trajpred {

using nlohmann::json;

std::vector<double> policy_mean(const GaussianPolicy& p, const double* s) {
  return mlp_forward(p.mean_net, s);
}

DeltaAction policy_sample(const GaussianPolicy& p, const double* s, Rng& rng) {
  const std::vector<double> mean = policy_mean(p, s);
  const double sigma = std::exp(p.log_std);
  std::vector<double> a_norm(mean.size());
  for (std::size_t k = 0; k < mean.size(); ++k) a_norm[k] = mean[k] + sigma * rng.normal();
  const std::vector<double> raw = p.action_stats.un_zscore(a_norm);
  return DeltaAction{raw[0], raw[1], raw[2]};
}

double policy_logprob_norm(const GaussianPolicy& p, const double* s, const double* a_norm) {
  const std::vector<double> mean = policy_mean(p, s);
  const double sigma = std::exp(p.log_std);
  double lp = 0.0;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double z = (a_norm[k] - mean[k]) / sigma;
    lp += -0.5 * std::log(kTwoPi) - p.log_std - 0.5 * z * z;
  }
  return lp;
}

double policy_logprob(const GaussianPolicy& p, const double* s, const DeltaAction& a) {
  const std::vector<double> a_norm = p.action_stats.zscore(action_to_vec(a));
  return policy_logprob_norm(p, s, a_norm.data());
}

void policy_logprob_grad(const GaussianPolicy& p, const double* s, const double* a_norm,
                         double coeff, double* grad_acc) {
  const std::vector<double> mean = policy_mean(p, s);
  const double inv_var = std::exp(-2.0 * p.log_std);
  // d logprob / d mean_k = (a_k - mean_k) / sigma^2
  std::vector<double> upstream(mean.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    upstream[k] = coeff * (a_norm[k] - mean[k]) * inv_var;
  }
  mlp_backward(p.mean_net, s, upstream.data(), grad_acc);
}

std::vector<double> action_to_vec(const DeltaAction& a) { return {a.dlon, a.dlat, a.dalt}; }

DeltaAction vec_to_action(const std::vector<double>& v) {
  if (v.size() != 3) throw std::runtime_error("action vector must have 3 components");
  return DeltaAction{v[0], v[1], v[2]};
}

double disc_logit(const Discriminator& d, const double* x) { return mlp_forward(d.net, x)[0]; }

double disc_prob(const Discriminator& d, const double* x) {
  return 1.0 / (1.0 + std::exp(-disc_logit(d, x)));
}

double value_of(const ValueNet& v, const double* x) { return mlp_forward(v.net, x)[0]; }

// ---- persistence ---- //

void save_policy(const std::string& path, const GaussianPolicy& p) {
  json j;
  j["format"] = "gaussian-policy-v1";
  j["log_std"] = p.log_std;
  j["mean_net"] = net_to_json(p.mean_net);
  j["input_stats"] = stats_to_json(p.input_stats);
  j["action_stats"] = stats_to_json(p.action_stats);
  j["input_names"] = p.input_names;
  write_json(path, j);
}

GaussianPolicy load_policy(const std::string& path) {
  const json j = read_json(path, "gaussian-policy-v1");
  GaussianPolicy p;
  p.log_std = j.at("log_std").get<double>();
  p.mean_net = net_from_json(j.at("mean_net"));
  p.input_stats = stats_from_json(j.at("input_stats"));
  p.action_stats = stats_from_json(j.at("action_stats"));
  p.input_names = j.at("input_names").get<std::vector<std::string>>();
  if (p.mean_net.output_dim() != action_dim()) {
    throw std::runtime_error(path + ": policy output arity must be 3");
  }
  if (p.mean_net.input_dim() != static_cast<int>(p.input_stats.dim())) {
    throw std::runtime_error(path + ": input stats arity does not match the network");
  }
  return p;
}

void save_discriminator(const std::string& path, const Discriminator& d) {
  json j;
  j["format"] = "discriminator-v1";
  j["net"] = net_to_json(d.net);
  write_json(path, j);
}

Discriminator load_discriminator(const std::string& path) {
  const json j = read_json(path, "discriminator-v1");
  Discriminator d;
  d.net = net_from_json(j.at("net"));
  if (d.net.output_dim() != 1) throw std::runtime_error(path + ": discriminator must have 1 output");
  return d;
}

void save_value_net(const std::string& path, const ValueNet& v) {
  json j;
  j["format"] = "value-net-v1";
  j["net"] = net_to_json(v.net);
  write_json(path, j);
}

ValueNet load_value_net(const std::string& path) {
  const json j = read_json(path, "value-net-v1");
  ValueNet v;
  v.net = net_from_json(j.at("net"));
  if (v.net.output_dim() != 1) throw std::runtime_error(path + ": value net must have 1 output");
  return v;
}

}  // namespace trajpred
