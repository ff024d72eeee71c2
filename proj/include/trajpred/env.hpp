#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trajpred/geo.hpp"
#include "trajpred/policy.hpp"
#include "trajpred/rng.hpp"
#include "trajpred/weather.hpp"

namespace trajpred {

enum class Termination { none, reached_dest, max_len, out_of_bounds };
std::string to_string(Termination t);

struct EnvConfig {
  std::int64_t dt = 5;  // seconds per action
  GeoPosition dest;
  double dest_radius_m = 5000.0;  // horizontal capture radius
  std::size_t max_len = 1000;     // action cap per episode
  BoundingBox bbox;
  const WeatherGrid* grid = nullptr;
  // Append the start trajectory's arrival conditions to every policy input
  // (the pooled single-policy setting).
  bool use_arrival_features = false;
};

struct Episode {
  std::vector<EnrichedState> states;  // |actions| + 1 entries
  std::vector<DeltaAction> actions;
  FeatureVector extra;  // arrival conditions fed alongside each state; may be empty
  Termination end = Termination::none;
};

struct RolloutBatch {
  std::vector<Episode> episodes;
  std::size_t n_samples = 0;  // total action count
};

// Raw (unnormalized) policy input: lon, lat, alt, t, state features, extra.
std::vector<double> policy_input(const EnrichedState& s, const FeatureVector& extra);
std::vector<std::string> policy_input_names(const std::vector<std::string>& state_features,
                                            const std::vector<std::string>& extra_names);

// Training starts: uniform over all (trajectory, state index) pairs.
std::pair<std::size_t, std::size_t> sample_initial(const std::vector<Trajectory>& train, Rng& rng);

// Evaluation start index: floor(m * (|T| - 1)).
std::size_t eval_initial_index(const Trajectory& t, double m_fraction);

// One transition. actions_taken counts the episode's actions including this
// one, for the length cap. Termination priority: reached_dest, then max_len,
// then out_of_bounds; a success is never discarded by a simultaneous cap or
// bounds exit. The operating volume is the bbox intersected with the grid's
// extent; weather comes from the grid's nearest node, and states outside the
// volume take the clamped lookup as placeholder features.
std::pair<EnrichedState, Termination> step(const EnrichedState& s, const DeltaAction& a,
                                           const EnvConfig& cfg, std::size_t actions_taken);

// Rolls one episode from start, sampling actions from the policy.
Episode run_episode(const GaussianPolicy& pi, const EnrichedState& start,
                    const FeatureVector& extra, const EnvConfig& cfg, Rng& rng);

// Runs episodes e = 0, 1, 2, ... with rng streams derived per episode until
// the flat sample count reaches n_samples; the last episode always completes.
// The parallel variant speculates a few episodes ahead but keeps the same
// prefix, so batches are bitwise identical to collect_serial for any thread
// count.
RolloutBatch collect(const GaussianPolicy& pi, const std::vector<Trajectory>& train,
                     const EnvConfig& cfg, std::size_t n_samples, const Rng& rng);
RolloutBatch collect_serial(const GaussianPolicy& pi, const std::vector<Trajectory>& train,
                            const EnvConfig& cfg, std::size_t n_samples, const Rng& rng);

}  // namespace trajpred
