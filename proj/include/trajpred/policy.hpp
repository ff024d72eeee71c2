#pragma once

#include <string>
#include <vector>

#include "trajpred/geo.hpp"
#include "trajpred/net.hpp"
#include "trajpred/normalize.hpp"

namespace trajpred {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Diagonal Gaussian over the 3 action dimensions in normalized action space.
// The mean comes from mean_net (fed with z-scored inputs); the log std is a
// fixed constant, not trained. Samples are de-normalized on the way out.
struct GaussianPolicy {
  Mlp mean_net;
  double log_std = 0.9;
  NormStats input_stats;   // z-score stats for the assembled input vector
  NormStats action_stats;  // z-score stats for (dlon, dlat, dalt)
  std::vector<std::string> input_names;
};

inline int action_dim() { return 3; }

// Mean of the normalized-action Gaussian at normalized input s.
std::vector<double> policy_mean(const GaussianPolicy& p, const double* s);

// Draw an action at normalized input s; returned in raw position units.
DeltaAction policy_sample(const GaussianPolicy& p, const double* s, Rng& rng);

// Log density of the normalized-action Gaussian evaluated at a (raw units;
// z-scored internally). No Jacobian term: densities are compared in the same
// normalized space on both sides of every ratio.
double policy_logprob(const GaussianPolicy& p, const double* s, const DeltaAction& a);

// Same, with the action already normalized.
double policy_logprob_norm(const GaussianPolicy& p, const double* s, const double* a_norm);

// Accumulates d logprob / d theta (flat layout) scaled by coeff into grad_acc.
void policy_logprob_grad(const GaussianPolicy& p, const double* s, const double* a_norm,
                         double coeff, double* grad_acc);

std::vector<double> action_to_vec(const DeltaAction& a);
DeltaAction vec_to_action(const std::vector<double>& v);

// Binary classifier over normalized (input, action) pairs; single logit.
struct Discriminator {
  Mlp net;
};

double disc_logit(const Discriminator& d, const double* x);
double disc_prob(const Discriminator& d, const double* x);  // sigmoid(logit)

struct ValueNet {
  Mlp net;
};

double value_of(const ValueNet& v, const double* x);

// Versioned JSON persistence. Doubles are written with shortest round-trip
// formatting, so a save/load cycle reproduces forward outputs bitwise.
void save_policy(const std::string& path, const GaussianPolicy& p);
GaussianPolicy load_policy(const std::string& path);
void save_discriminator(const std::string& path, const Discriminator& d);
Discriminator load_discriminator(const std::string& path);
void save_value_net(const std::string& path, const ValueNet& v);
ValueNet load_value_net(const std::string& path);

}  // namespace trajpred
