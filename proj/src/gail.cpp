#include "trajpred/gail.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "trajpred/csv.hpp"
#include "trajpred/json_io.hpp"
#include "trajpred/preprocess.hpp"

namespace trajpred {

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.index(i)]);
  }
}

}  // namespace

DemoSet build_demos(const std::vector<Trajectory>& trajs, bool use_arrival_features) {
  DemoSet out;
  for (const Trajectory& t : trajs) {
    if (t.states.size() < 2) {
      throw std::runtime_error("build_demos: trajectory '" + t.id + "' has fewer than 2 states");
    }
    if (use_arrival_features && t.arrival_features.empty()) {
      throw std::runtime_error("build_demos: trajectory '" + t.id + "' has no arrival features");
    }
    const FeatureVector extra = use_arrival_features ? t.arrival_features : FeatureVector{};
    for (const auto& [state, action] : derive_actions(t)) {
      out.inputs.push_back(policy_input(state, extra));
      out.actions.push_back(action);
    }
  }
  if (out.inputs.empty()) throw std::runtime_error("build_demos: no trajectories");
  for (const auto& row : out.inputs) {
    if (row.size() != out.inputs.front().size()) {
      throw std::runtime_error("build_demos: inconsistent feature arity across trajectories");
    }
  }
  // Trajectories carry feature values, not names; synthesize placeholders the
  // caller may overwrite with the dataset's real labels.
  std::vector<std::string> feat(trajs.front().states.front().features.size());
  for (std::size_t i = 0; i < feat.size(); ++i) feat[i] = "f" + std::to_string(i);
  std::vector<std::string> extra_names;
  if (use_arrival_features) {
    extra_names.resize(trajs.front().arrival_features.size());
    for (std::size_t i = 0; i < extra_names.size(); ++i) {
      extra_names[i] = "arr" + std::to_string(i);
    }
  }
  out.input_names = policy_input_names(feat, extra_names);
  return out;
}

void validate(const GailConfig& cfg) {
  if (cfg.iterations < 1) throw std::runtime_error("gail config: iterations must be positive");
  if (cfg.batch_samples < 1) throw std::runtime_error("gail config: batch_samples must be positive");
  if (cfg.disc_epochs < 1) throw std::runtime_error("gail config: disc_epochs must be positive");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw std::runtime_error("gail config: gamma must be in (0,1]");
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw std::runtime_error("gail config: lambda must be in (0,1]");
  if (!(cfg.kl_limit > 0.0)) throw std::runtime_error("gail config: kl_limit must be positive");
  if (cfg.cg_iters < 1) throw std::runtime_error("gail config: cg_iters must be positive");
  if (!(cfg.cg_damping > 0.0)) throw std::runtime_error("gail config: cg_damping must be positive");
  if (!(cfg.backtrack_ratio > 0.0 && cfg.backtrack_ratio < 1.0)) {
    throw std::runtime_error("gail config: backtrack_ratio must be in (0,1)");
  }
  if (cfg.backtrack_steps < 1) throw std::runtime_error("gail config: backtrack_steps must be positive");
  if (cfg.bc_epochs < 1) throw std::runtime_error("gail config: bc_epochs must be positive");
  if (cfg.bc_folds < 2) throw std::runtime_error("gail config: bc_folds must be at least 2");
  if (cfg.value_epochs < 1) throw std::runtime_error("gail config: value_epochs must be positive");
  if (!(cfg.disc_lr > 0.0)) throw std::runtime_error("gail config: disc_lr must be positive");
  if (!(cfg.value_lr > 0.0)) throw std::runtime_error("gail config: value_lr must be positive");
  if (cfg.checkpoint_every < 0) throw std::runtime_error("gail config: checkpoint_every must be >= 0");
}

GaussianPolicy train_bc(const DemoSet& demos, int epochs, int folds, const Rng& rng) {
  const std::size_t n = demos.inputs.size();
  if (n == 0) throw std::runtime_error("train_bc: no demonstrations");
  if (demos.actions.size() != n) throw std::runtime_error("train_bc: inputs/actions size mismatch");
  if (folds < 2) throw std::runtime_error("train_bc: folds must be at least 2");
  if (n < static_cast<std::size_t>(folds)) {
    throw std::runtime_error("train_bc: need at least one demonstration per fold");
  }
  if (epochs < 1) throw std::runtime_error("train_bc: epochs must be positive");

  // Constant input columns are tolerated: a cluster's demos can share, for
  // example, identical arrival conditions.
  const NormStats in_stats = NormStats::fit(demos.inputs, demos.input_names, true);
  std::vector<std::vector<double>> act_rows(n);
  for (std::size_t i = 0; i < n; ++i) act_rows[i] = action_to_vec(demos.actions[i]);
  const NormStats act_stats = NormStats::fit(act_rows, {"dlon", "dlat", "dalt"}, true);

  std::vector<std::vector<double>> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = in_stats.zscore(demos.inputs[i]);
    y[i] = act_stats.zscore(act_rows[i]);
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng split_rng = rng.derive(0);
  shuffle_indices(perm, split_rng);

  const int in_dim = static_cast<int>(demos.input_names.size());
  constexpr std::size_t kMinibatch = 64;
  const int out_dim = 3;

  Mlp best_net;
  double best_mse = std::numeric_limits<double>::infinity();

  for (int f = 0; f < folds; ++f) {
    const std::size_t lo = (static_cast<std::size_t>(f) * n) / folds;
    const std::size_t hi = (static_cast<std::size_t>(f) + 1) * n / folds;
    std::vector<std::size_t> train_idx;
    train_idx.reserve(n - (hi - lo));
    for (std::size_t i = 0; i < n; ++i) {
      if (i < lo || i >= hi) train_idx.push_back(perm[i]);
    }

    Rng fold_rng = rng.derive(1 + static_cast<std::uint64_t>(f));
    Mlp net = mlp_init({in_dim, 100, 100, out_dim}, fold_rng);
    AdamState adam = make_adam(mlp_param_count(net), 1e-3);
    std::vector<double> grad(mlp_param_count(net));
    std::vector<double> upstream(out_dim);

    for (int e = 0; e < epochs; ++e) {
      shuffle_indices(train_idx, fold_rng);
      for (std::size_t at = 0; at < train_idx.size(); at += kMinibatch) {
        const std::size_t end = std::min(at + kMinibatch, train_idx.size());
        const double denom = static_cast<double>((end - at) * out_dim);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t r = at; r < end; ++r) {
          const std::size_t i = train_idx[r];
          const std::vector<double> out = mlp_forward(net, x[i].data());
          for (int d = 0; d < out_dim; ++d) upstream[d] = 2.0 * (out[d] - y[i][d]) / denom;
          mlp_backward(net, x[i].data(), upstream.data(), grad.data());
        }
        adam_step_net(net, grad, adam);
      }
    }

    double mse = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t v = perm[i];
      const std::vector<double> out = mlp_forward(net, x[v].data());
      for (int d = 0; d < out_dim; ++d) {
        const double e2 = out[d] - y[v][d];
        mse += e2 * e2;
      }
    }
    mse /= static_cast<double>((hi - lo) * out_dim);
    if (mse < best_mse) {
      best_mse = mse;
      best_net = net;
    }
  }

  GaussianPolicy p;
  p.mean_net = std::move(best_net);
  p.log_std = 0.9;
  p.input_stats = in_stats;
  p.action_stats = act_stats;
  p.input_names = demos.input_names;
  return p;
}

AdvantageSeries gae(const std::vector<double>& rewards, const std::vector<double>& values,
                    double gamma, double lambda) {
  if (values.size() != rewards.size() + 1) {
    throw std::runtime_error("gae: need one value per state including the terminal state");
  }
  if (!all_finite(rewards) || !all_finite(values)) {
    throw std::runtime_error("gae: non-finite input");
  }
  const std::size_t n = rewards.size();
  AdvantageSeries out;
  out.advantages.resize(n);
  out.value_targets.resize(n);
  double acc = 0.0;
  double ret = values[n];
  for (std::size_t t = n; t-- > 0;) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    acc = delta + gamma * lambda * acc;
    out.advantages[t] = acc;
    ret = rewards[t] + gamma * ret;
    out.value_targets[t] = ret;
  }
  return out;
}

namespace {

void check_disc_rows(const Discriminator& d, const std::vector<std::vector<double>>& rows,
                     const char* which) {
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != d.net.input_dim()) {
      throw std::runtime_error(std::string("discriminator: ") + which + " row arity mismatch");
    }
  }
}

// Shared BCE accumulation over row pointer views; grad_acc may be null.
double disc_bce_impl(const Discriminator& d, const std::vector<const std::vector<double>*>& policy_rows,
                     const std::vector<const std::vector<double>*>& expert_rows, double* grad_acc) {
  if (policy_rows.empty() || expert_rows.empty()) {
    throw std::runtime_error("discriminator: both sample sets must be non-empty");
  }
  double loss = 0.0;
  const double wp = 0.5 / static_cast<double>(policy_rows.size());
  const double we = 0.5 / static_cast<double>(expert_rows.size());
  double upstream = 0.0;
  for (const auto* row : policy_rows) {
    const double z = disc_logit(d, row->data());
    loss += wp * softplus(-z);  // -log D, pushed toward D = 1
    if (grad_acc != nullptr) {
      upstream = wp * (disc_prob(d, row->data()) - 1.0);
      mlp_backward(d.net, row->data(), &upstream, grad_acc);
    }
  }
  for (const auto* row : expert_rows) {
    const double z = disc_logit(d, row->data());
    loss += we * softplus(z);  // -log(1 - D), pushed toward D = 0
    if (grad_acc != nullptr) {
      upstream = we * disc_prob(d, row->data());
      mlp_backward(d.net, row->data(), &upstream, grad_acc);
    }
  }
  return loss;
}

std::vector<const std::vector<double>*> row_view(const std::vector<std::vector<double>>& rows) {
  std::vector<const std::vector<double>*> v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v[i] = &rows[i];
  return v;
}

}  // namespace

double disc_bce_loss(const Discriminator& d, const std::vector<std::vector<double>>& policy_rows,
                     const std::vector<std::vector<double>>& expert_rows) {
  check_disc_rows(d, policy_rows, "policy");
  check_disc_rows(d, expert_rows, "expert");
  return disc_bce_impl(d, row_view(policy_rows), row_view(expert_rows), nullptr);
}

double disc_bce_loss_grad(const Discriminator& d,
                          const std::vector<std::vector<double>>& policy_rows,
                          const std::vector<std::vector<double>>& expert_rows,
                          std::vector<double>& grad) {
  check_disc_rows(d, policy_rows, "policy");
  check_disc_rows(d, expert_rows, "expert");
  grad.assign(mlp_param_count(d.net), 0.0);
  return disc_bce_impl(d, row_view(policy_rows), row_view(expert_rows), grad.data());
}

void discriminator_update(Discriminator& d, const std::vector<std::vector<double>>& policy_rows,
                          const std::vector<std::vector<double>>& expert_rows, int epochs,
                          AdamState& adam, Rng& rng) {
  if (policy_rows.empty() || expert_rows.empty()) {
    throw std::runtime_error("discriminator_update: both sample sets must be non-empty");
  }
  check_disc_rows(d, policy_rows, "policy");
  check_disc_rows(d, expert_rows, "expert");

  std::vector<double> grad(mlp_param_count(d.net));
  for (int e = 0; e < epochs; ++e) {
    // Balance the classes: resample the smaller set with replacement up to
    // the larger set's size, fresh draws every epoch.
    std::vector<const std::vector<double>*> p_use = row_view(policy_rows);
    std::vector<const std::vector<double>*> e_use = row_view(expert_rows);
    if (p_use.size() < e_use.size()) {
      std::vector<const std::vector<double>*> resampled(e_use.size());
      for (auto& slot : resampled) slot = &policy_rows[rng.index(policy_rows.size())];
      p_use = std::move(resampled);
    } else if (e_use.size() < p_use.size()) {
      std::vector<const std::vector<double>*> resampled(p_use.size());
      for (auto& slot : resampled) slot = &expert_rows[rng.index(expert_rows.size())];
      e_use = std::move(resampled);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    disc_bce_impl(d, p_use, e_use, grad.data());
    adam_step_net(d.net, grad, adam);
  }
}

double value_mse_loss(const ValueNet& v, const std::vector<std::vector<double>>& rows,
                      const std::vector<double>& targets) {
  if (rows.size() != targets.size()) throw std::runtime_error("value loss: row/target size mismatch");
  if (rows.empty()) throw std::runtime_error("value loss: empty batch");
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double e = value_of(v, rows[i].data()) - targets[i];
    loss += e * e;
  }
  return loss / static_cast<double>(rows.size());
}

double value_mse_loss_grad(const ValueNet& v, const std::vector<std::vector<double>>& rows,
                           const std::vector<double>& targets, std::vector<double>& grad) {
  if (rows.size() != targets.size()) throw std::runtime_error("value loss: row/target size mismatch");
  if (rows.empty()) throw std::runtime_error("value loss: empty batch");
  grad.assign(mlp_param_count(v.net), 0.0);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double e = value_of(v, rows[i].data()) - targets[i];
    loss += e * e * inv_n;
    const double upstream = 2.0 * e * inv_n;
    mlp_backward(v.net, rows[i].data(), &upstream, grad.data());
  }
  return loss;
}

std::vector<double> conjugate_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& hvp,
    const std::vector<double>& g, int iters, double tol) {
  const std::size_t n = g.size();
  std::vector<double> x(n, 0.0);
  if (!all_finite(g)) throw std::runtime_error("conjugate_gradient: non-finite right-hand side");
  std::vector<double> r = g;
  std::vector<double> p = g;
  double rs = dot(r, r);
  const double g_norm = std::sqrt(rs);
  if (g_norm == 0.0) return x;
  const double stop = tol * g_norm;
  for (int it = 0; it < iters; ++it) {
    const std::vector<double> hp = hvp(p);
    if (hp.size() != n || !all_finite(hp)) {
      throw std::runtime_error("conjugate_gradient: non-finite operator output");
    }
    const double php = dot(p, hp);
    if (!(php > 0.0)) throw std::runtime_error("conjugate_gradient: operator is not positive definite");
    const double alpha = rs / php;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * hp[i];
    }
    const double rs_new = dot(r, r);
    if (!std::isfinite(rs_new)) throw std::runtime_error("conjugate_gradient: non-finite residual");
    if (std::sqrt(rs_new) <= stop) break;
    const double beta = rs_new / rs;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rs = rs_new;
  }
  return x;
}

TrpoResult trpo_step(GaussianPolicy& pi, const std::vector<std::vector<double>>& inputs_norm,
                     const std::vector<std::vector<double>>& actions_norm,
                     const std::vector<double>& advantages, const GailConfig& cfg) {
  const std::size_t n = inputs_norm.size();
  if (n == 0) throw std::runtime_error("trpo_step: empty batch");
  if (actions_norm.size() != n || advantages.size() != n) {
    throw std::runtime_error("trpo_step: batch arity mismatch");
  }
  const int in_dim = pi.mean_net.input_dim();
  const int out_dim = pi.mean_net.output_dim();
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(inputs_norm[i].size()) != in_dim ||
        static_cast<int>(actions_norm[i].size()) != out_dim) {
      throw std::runtime_error("trpo_step: row arity mismatch");
    }
  }
  if (!all_finite(advantages)) throw std::runtime_error("trpo_step: non-finite advantages");

  const double sigma = std::exp(pi.log_std);
  const double inv_var = 1.0 / (sigma * sigma);
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t n_params = mlp_param_count(pi.mean_net);

  // Old means and squared action residuals; log-density constants cancel in
  // every ratio, so residuals are all the line search needs.
  std::vector<std::vector<double>> mu_old(n);
  std::vector<double> sq_old(n);
  double surr_old = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu_old[i] = policy_mean(pi, inputs_norm[i].data());
    if (!all_finite(mu_old[i])) throw std::runtime_error("trpo_step: non-finite policy output");
    double sq = 0.0;
    for (int d = 0; d < out_dim; ++d) {
      const double e = actions_norm[i][d] - mu_old[i][d];
      sq += e * e;
    }
    sq_old[i] = sq;
    surr_old += advantages[i] * inv_n;
  }

  TrpoResult res;
  res.surrogate_before = surr_old;
  res.surrogate_after = surr_old;

  std::vector<double> g(n_params, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    policy_logprob_grad(pi, inputs_norm[i].data(), actions_norm[i].data(),
                        advantages[i] * inv_n, g.data());
  }
  bool any = false;
  for (double v : g) {
    if (v != 0.0) {
      any = true;
      break;
    }
  }
  if (!any) return res;

  const auto hvp = [&](const std::vector<double>& v) {
    std::vector<double> out(n_params, 0.0);
    std::vector<double> upstream(out_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> tangent = mlp_jvp(pi.mean_net, inputs_norm[i].data(), v.data());
      for (int d = 0; d < out_dim; ++d) upstream[d] = tangent[d] * inv_var * inv_n;
      mlp_backward(pi.mean_net, inputs_norm[i].data(), upstream.data(), out.data());
    }
    for (std::size_t k = 0; k < n_params; ++k) out[k] += cfg.cg_damping * v[k];
    return out;
  };

  const std::vector<double> x = conjugate_gradient(hvp, g, cfg.cg_iters, 1e-10);
  const double xhx = dot(x, hvp(x));
  if (!(xhx > 0.0) || !std::isfinite(xhx)) return res;
  double scale = std::sqrt(2.0 * cfg.kl_limit / xhx);

  std::vector<double> theta_old(n_params);
  mlp_get_params(pi.mean_net, theta_old.data());
  std::vector<double> theta_try(n_params);

  for (int bs = 0; bs < cfg.backtrack_steps; ++bs) {
    for (std::size_t k = 0; k < n_params; ++k) theta_try[k] = theta_old[k] + scale * x[k];
    mlp_set_params(pi.mean_net, theta_try.data());

    double kl = 0.0;
    double surr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> mu = policy_mean(pi, inputs_norm[i].data());
      double dmu = 0.0;
      double sq = 0.0;
      for (int d = 0; d < out_dim; ++d) {
        const double dm = mu[d] - mu_old[i][d];
        dmu += dm * dm;
        const double e = actions_norm[i][d] - mu[d];
        sq += e * e;
      }
      kl += dmu;
      surr += std::exp(0.5 * inv_var * (sq_old[i] - sq)) * advantages[i];
    }
    kl *= 0.5 * inv_var * inv_n;
    surr *= inv_n;

    if (std::isfinite(kl) && std::isfinite(surr) && surr > surr_old && kl <= cfg.kl_limit) {
      res.accepted = true;
      res.kl = kl;
      res.surrogate_after = surr;
      res.delta.resize(n_params);
      for (std::size_t k = 0; k < n_params; ++k) res.delta[k] = scale * x[k];
      return res;
    }
    scale *= cfg.backtrack_ratio;
  }

  mlp_set_params(pi.mean_net, theta_old.data());
  return res;
}

std::vector<std::string> iteration_stats_header() {
  return {"iteration",        "episodes",        "samples",          "mean_episode_len",
          "frac_reached_dest", "mean_disc_policy", "mean_disc_expert", "mean_reward",
          "surrogate_before", "surrogate_after",  "kl",               "accepted"};
}

std::vector<std::string> iteration_stats_row(const IterationStats& s) {
  return {std::to_string(s.iteration),
          std::to_string(s.n_episodes),
          std::to_string(s.n_samples),
          fmt_double(s.mean_episode_len),
          fmt_double(s.frac_reached_dest),
          fmt_double(s.mean_disc_policy),
          fmt_double(s.mean_disc_expert),
          fmt_double(s.mean_reward),
          fmt_double(s.surrogate_before),
          fmt_double(s.surrogate_after),
          fmt_double(s.kl),
          s.accepted ? "1" : "0"};
}

namespace {

nlohmann::json adam_to_json(const AdamState& st) {
  nlohmann::json j;
  j["lr"] = st.lr;
  j["beta1"] = st.beta1;
  j["beta2"] = st.beta2;
  j["eps"] = st.eps;
  j["t"] = st.t;
  j["m"] = st.m;
  j["v"] = st.v;
  return j;
}

std::string iter_tag(int iteration) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", iteration);
  return buf;
}

void save_checkpoint(const std::string& dir, int iteration, const GailResult& res,
                     const AdamState& disc_adam, const AdamState& value_adam) {
  std::filesystem::create_directories(dir);
  const std::string tag = iter_tag(iteration);
  save_policy(dir + "/policy_" + tag + ".json", res.policy);
  save_discriminator(dir + "/discriminator_" + tag + ".json", res.discriminator);
  save_value_net(dir + "/value_" + tag + ".json", res.value);
  nlohmann::json j;
  j["format"] = "gail-optimizer-v1";
  j["iteration"] = iteration;
  j["discriminator"] = adam_to_json(disc_adam);
  j["value"] = adam_to_json(value_adam);
  write_json(dir + "/optimizer_" + tag + ".json", j);
}

}  // namespace

GailResult train_gail(const DemoSet& demos, const std::vector<Trajectory>& train,
                      const EnvConfig& env, const GailConfig& cfg, const Rng& rng,
                      const std::string& diagnostics_csv, const std::string& checkpoint_dir) {
  validate(cfg);
  if (demos.inputs.empty()) throw std::runtime_error("train_gail: no demonstrations");
  if (train.empty()) throw std::runtime_error("train_gail: no training trajectories");
  if (env.grid == nullptr) throw std::runtime_error("train_gail: env has no weather grid");

  GailResult res;
  res.policy = train_bc(demos, cfg.bc_epochs, cfg.bc_folds, rng.derive(1));
  res.bc_policy = res.policy;
  const int in_dim = res.policy.mean_net.input_dim();

  {
    const FeatureVector extra =
        env.use_arrival_features ? train.front().arrival_features : FeatureVector{};
    const std::vector<double> probe = policy_input(train.front().states.at(0), extra);
    if (static_cast<int>(probe.size()) != in_dim) {
      throw std::runtime_error("train_gail: demo input arity does not match rollout inputs");
    }
  }

  Rng init_rng = rng.derive(2);
  res.discriminator.net = mlp_init({in_dim + action_dim(), 100, 100, 1}, init_rng);
  res.value.net = mlp_init({in_dim, 100, 100, 1}, init_rng);
  AdamState disc_adam = make_adam(mlp_param_count(res.discriminator.net), cfg.disc_lr);
  AdamState value_adam = make_adam(mlp_param_count(res.value.net), cfg.value_lr);

  // Expert rows are normalized once with the BC stats and reused all run.
  std::vector<std::vector<double>> expert_rows(demos.inputs.size());
  for (std::size_t i = 0; i < demos.inputs.size(); ++i) {
    std::vector<double> row = res.policy.input_stats.zscore(demos.inputs[i]);
    const std::vector<double> a = res.policy.action_stats.zscore(action_to_vec(demos.actions[i]));
    row.insert(row.end(), a.begin(), a.end());
    expert_rows[i] = std::move(row);
  }

  std::unique_ptr<CsvWriter> diag;
  if (!diagnostics_csv.empty()) {
    diag = std::make_unique<CsvWriter>(diagnostics_csv, iteration_stats_header());
  }

  std::vector<double> value_grad;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const Rng iter_rng = rng.derive(1000 + static_cast<std::uint64_t>(iter));
    const RolloutBatch batch = collect(res.policy, train, env, cfg.batch_samples,
                                       iter_rng.derive(0));

    // Normalized views of the batch: policy inputs, actions, and the
    // concatenated rows the discriminator sees.
    const std::size_t flat = batch.n_samples;
    std::vector<std::vector<double>> inputs_norm;
    std::vector<std::vector<double>> actions_norm;
    std::vector<std::vector<double>> disc_rows;
    inputs_norm.reserve(flat);
    actions_norm.reserve(flat);
    disc_rows.reserve(flat);
    for (const Episode& ep : batch.episodes) {
      for (std::size_t t = 0; t < ep.actions.size(); ++t) {
        std::vector<double> in =
            res.policy.input_stats.zscore(policy_input(ep.states[t], ep.extra));
        std::vector<double> a =
            res.policy.action_stats.zscore(action_to_vec(ep.actions[t]));
        std::vector<double> row = in;
        row.insert(row.end(), a.begin(), a.end());
        inputs_norm.push_back(std::move(in));
        actions_norm.push_back(std::move(a));
        disc_rows.push_back(std::move(row));
      }
    }

    Rng disc_rng = iter_rng.derive(1);
    discriminator_update(res.discriminator, disc_rows, expert_rows, cfg.disc_epochs, disc_adam,
                         disc_rng);

    // Per-sample reward -log D with the updated discriminator; softplus keeps
    // confident D outputs from producing infinities.
    std::vector<double> rewards(flat);
    double mean_disc_policy = 0.0;
    for (std::size_t i = 0; i < flat; ++i) {
      const double z = disc_logit(res.discriminator, disc_rows[i].data());
      rewards[i] = softplus(-z);
      mean_disc_policy += disc_prob(res.discriminator, disc_rows[i].data());
    }
    mean_disc_policy /= static_cast<double>(flat);
    double mean_disc_expert = 0.0;
    for (const auto& row : expert_rows) {
      mean_disc_expert += disc_prob(res.discriminator, row.data());
    }
    mean_disc_expert /= static_cast<double>(expert_rows.size());

    // Critic regression on empirical discounted returns, terminal value 0.
    std::vector<double> returns(flat);
    {
      std::size_t base = 0;
      for (const Episode& ep : batch.episodes) {
        const std::size_t len = ep.actions.size();
        double ret = 0.0;
        for (std::size_t t = len; t-- > 0;) {
          ret = rewards[base + t] + cfg.gamma * ret;
          returns[base + t] = ret;
        }
        base += len;
      }
    }
    for (int e = 0; e < cfg.value_epochs; ++e) {
      value_mse_loss_grad(res.value, inputs_norm, returns, value_grad);
      adam_step_net(res.value.net, value_grad, value_adam);
    }

    // Advantages from the refreshed critic, z-scored across the whole batch.
    std::vector<double> advantages(flat);
    {
      std::size_t base = 0;
      for (const Episode& ep : batch.episodes) {
        const std::size_t len = ep.actions.size();
        std::vector<double> ep_rewards(rewards.begin() + base, rewards.begin() + base + len);
        std::vector<double> values(len + 1);
        for (std::size_t t = 0; t < len; ++t) {
          values[t] = value_of(res.value, inputs_norm[base + t].data());
        }
        values[len] = 0.0;
        const AdvantageSeries series = gae(ep_rewards, values, cfg.gamma, cfg.lambda);
        std::copy(series.advantages.begin(), series.advantages.end(), advantages.begin() + base);
        base += len;
      }
      double mean = 0.0;
      for (double a : advantages) mean += a;
      mean /= static_cast<double>(flat);
      double var = 0.0;
      for (double a : advantages) var += (a - mean) * (a - mean);
      const double sd = std::sqrt(var / static_cast<double>(flat));
      if (sd > 0.0) {
        for (double& a : advantages) a = (a - mean) / sd;
      } else {
        std::fill(advantages.begin(), advantages.end(), 0.0);
      }
    }

    const TrpoResult tr = trpo_step(res.policy, inputs_norm, actions_norm, advantages, cfg);

    IterationStats st;
    st.iteration = iter;
    st.n_episodes = batch.episodes.size();
    st.n_samples = flat;
    st.mean_episode_len = static_cast<double>(flat) / static_cast<double>(batch.episodes.size());
    std::size_t reached = 0;
    for (const Episode& ep : batch.episodes) {
      if (ep.end == Termination::reached_dest) ++reached;
    }
    st.frac_reached_dest =
        static_cast<double>(reached) / static_cast<double>(batch.episodes.size());
    st.mean_disc_policy = mean_disc_policy;
    st.mean_disc_expert = mean_disc_expert;
    double mean_reward = 0.0;
    for (double r : rewards) mean_reward += r;
    st.mean_reward = mean_reward / static_cast<double>(flat);
    st.surrogate_before = tr.surrogate_before;
    st.surrogate_after = tr.surrogate_after;
    st.kl = tr.kl;
    st.accepted = tr.accepted;
    res.history.push_back(st);
    if (diag) diag->row(iteration_stats_row(st));

    if (cfg.checkpoint_every > 0 && !checkpoint_dir.empty() &&
        (iter + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(checkpoint_dir, iter + 1, res, disc_adam, value_adam);
    }
  }
  return res;
}

}  // namespace trajpred
