#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trajpred/env.hpp"
#include "trajpred/net.hpp"
#include "trajpred/policy.hpp"
#include "trajpred/rng.hpp"

namespace trajpred {

// Expert state-action pairs in raw units, with the assembled policy-input
// layout (one input row per demonstrated action).
struct DemoSet {
  std::vector<std::string> input_names;
  std::vector<std::vector<double>> inputs;
  std::vector<DeltaAction> actions;
};

// Flattens trajectories into (policy input, delta action) pairs. States must
// already be enriched; arrival features are appended when requested.
DemoSet build_demos(const std::vector<Trajectory>& trajs, bool use_arrival_features);

struct GailConfig {
  int iterations = 1500;
  std::size_t batch_samples = 50000;
  int disc_epochs = 100;
  double gamma = 0.995;
  double lambda = 0.97;
  double kl_limit = 0.01;  // per-step mean KL budget
  int cg_iters = 10;
  double cg_damping = 0.1;
  double backtrack_ratio = 0.5;
  int backtrack_steps = 10;
  int bc_epochs = 100;
  int bc_folds = 10;
  int value_epochs = 5;
  double disc_lr = 3e-4;
  double value_lr = 1e-2;
  int checkpoint_every = 0;  // iterations between checkpoints; 0 disables
};

void validate(const GailConfig& cfg);

// Per-episode advantage estimates and empirical discounted-return targets,
// one entry per action.
struct AdvantageSeries {
  std::vector<double> advantages;
  std::vector<double> value_targets;
};

// Behavioral cloning: Adam MSE regression of the policy mean onto normalized
// demonstrated actions, k-fold cross-validated; returns the fold model with
// the lowest validation MSE (ties keep the lowest fold index).
GaussianPolicy train_bc(const DemoSet& demos, int epochs, int folds, const Rng& rng);

// Exponentially weighted advantage estimation by the backward recursion
// A_t = d_t + gamma*lambda*A_{t+1}, d_t = r_t + gamma*V_{t+1} - V_t.
// values has one entry per state including the terminal state; value targets
// are the discounted reward sums bootstrapped with values.back().
AdvantageSeries gae(const std::vector<double>& rewards, const std::vector<double>& values,
                    double gamma, double lambda);

// Mean binary cross-entropy with policy rows labeled 1 and expert rows 0,
// each set weighted equally. grad is accumulated in the net's flat layout.
double disc_bce_loss(const Discriminator& d, const std::vector<std::vector<double>>& policy_rows,
                     const std::vector<std::vector<double>>& expert_rows);
double disc_bce_loss_grad(const Discriminator& d,
                          const std::vector<std::vector<double>>& policy_rows,
                          const std::vector<std::vector<double>>& expert_rows,
                          std::vector<double>& grad);

// In-place classifier update: one full-batch Adam step per epoch on balanced
// sets, resampling the smaller set with replacement each epoch.
void discriminator_update(Discriminator& d, const std::vector<std::vector<double>>& policy_rows,
                          const std::vector<std::vector<double>>& expert_rows, int epochs,
                          AdamState& adam, Rng& rng);

double value_mse_loss(const ValueNet& v, const std::vector<std::vector<double>>& rows,
                      const std::vector<double>& targets);
double value_mse_loss_grad(const ValueNet& v, const std::vector<std::vector<double>>& rows,
                           const std::vector<double>& targets, std::vector<double>& grad);

// Solves H x = g for symmetric positive-definite H given only v -> H v.
// Stops when the recursive residual norm drops to tol * |g| or after iters.
std::vector<double> conjugate_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& hvp,
    const std::vector<double>& g, int iters, double tol);

struct TrpoResult {
  bool accepted = false;
  double kl = 0.0;               // measured batch KL of the returned policy
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
  std::vector<double> delta;     // applied parameter change; empty if rejected
};

// One KL-constrained natural-gradient step on the policy mean parameters.
// inputs/actions are normalized rows; advantages are aligned per row. The
// candidate step is backtracked until the surrogate strictly improves and the
// measured KL stays within cfg.kl_limit; otherwise the policy is unchanged.
TrpoResult trpo_step(GaussianPolicy& pi, const std::vector<std::vector<double>>& inputs_norm,
                     const std::vector<std::vector<double>>& actions_norm,
                     const std::vector<double>& advantages, const GailConfig& cfg);

struct IterationStats {
  int iteration = 0;
  std::size_t n_episodes = 0;
  std::size_t n_samples = 0;
  double mean_episode_len = 0.0;
  double frac_reached_dest = 0.0;
  double mean_disc_policy = 0.0;
  double mean_disc_expert = 0.0;
  double mean_reward = 0.0;
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
  double kl = 0.0;
  bool accepted = false;
};

std::vector<std::string> iteration_stats_header();
std::vector<std::string> iteration_stats_row(const IterationStats& s);

struct GailResult {
  GaussianPolicy policy;
  GaussianPolicy bc_policy;  // behavioral-cloning init, before adversarial steps
  ValueNet value;
  Discriminator discriminator;
  std::vector<IterationStats> history;
};

// Full adversarial imitation loop: behavioral-cloning init, then per
// iteration: collect rollouts, update the discriminator, reward each sample
// with -log D, refit the value net on discounted returns, estimate
// advantages, and take one constrained policy step. train supplies rollout
// start states; demos supply the expert side. Diagnostics go to
// diagnostics_csv (one flushed row per iteration) when non-empty; checkpoints
// go to checkpoint_dir every cfg.checkpoint_every iterations when set.
GailResult train_gail(const DemoSet& demos, const std::vector<Trajectory>& train,
                      const EnvConfig& env, const GailConfig& cfg, const Rng& rng,
                      const std::string& diagnostics_csv = "",
                      const std::string& checkpoint_dir = "");

}  // namespace trajpred
