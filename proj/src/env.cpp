#include "trajpred/env.hpp"

#include <cmath>
#include <stdexcept>

namespace trajpred {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::none: return "none";
    case Termination::reached_dest: return "reached_dest";
    case Termination::max_len: return "max_len";
    case Termination::out_of_bounds: return "out_of_bounds";
  }
  return "unknown";
}

std::vector<double> policy_input(const EnrichedState& s, const FeatureVector& extra) {
  std::vector<double> in;
  in.reserve(4 + s.features.size() + extra.size());
  in.push_back(s.position.lon);
  in.push_back(s.position.lat);
  in.push_back(s.position.alt);
  in.push_back(static_cast<double>(s.timestamp));
  in.insert(in.end(), s.features.begin(), s.features.end());
  in.insert(in.end(), extra.begin(), extra.end());
  return in;
}

std::vector<std::string> policy_input_names(const std::vector<std::string>& state_features,
                                            const std::vector<std::string>& extra_names) {
  std::vector<std::string> names = {"lon", "lat", "alt", "t"};
  names.insert(names.end(), state_features.begin(), state_features.end());
  names.insert(names.end(), extra_names.begin(), extra_names.end());
  return names;
}

std::pair<std::size_t, std::size_t> sample_initial(const std::vector<Trajectory>& train,
                                                   Rng& rng) {
  std::size_t total = 0;
  for (const Trajectory& t : train) total += t.states.size();
  if (total == 0) throw std::runtime_error("sample_initial: no states in training set");
  std::size_t flat = rng.index(total);
  for (std::size_t ti = 0; ti < train.size(); ++ti) {
    if (flat < train[ti].states.size()) return {ti, flat};
    flat -= train[ti].states.size();
  }
  throw std::logic_error("sample_initial: unreachable");
}

std::size_t eval_initial_index(const Trajectory& t, double m_fraction) {
  if (t.states.empty()) throw std::runtime_error("eval_initial_index: empty trajectory");
  if (m_fraction < 0.0 || m_fraction >= 1.0) {
    throw std::runtime_error("eval_initial_index: fraction must be in [0, 1)");
  }
  return static_cast<std::size_t>(
      std::floor(m_fraction * static_cast<double>(t.states.size() - 1)));
}

std::pair<EnrichedState, Termination> step(const EnrichedState& s, const DeltaAction& a,
                                           const EnvConfig& cfg, std::size_t actions_taken) {
  if (cfg.grid == nullptr) throw std::runtime_error("step: no weather grid configured");
  EnrichedState next;
  next.position = apply_action(s.position, a);
  next.timestamp = s.timestamp + cfg.dt;

  const bool finite = std::isfinite(next.position.lon) && std::isfinite(next.position.lat) &&
                      std::isfinite(next.position.alt);
  // The operating volume is the bbox AND the grid: a rollout can leave the
  // modeled airspace vertically or temporally while staying inside the
  // lateral box, and that ends the episode the same way.
  const bool inside = finite && cfg.bbox.contains(next.position) &&
                      cfg.grid->covers(next.position, next.timestamp);

  Termination done = Termination::none;
  if (finite &&
      distance_horizontal(cfg.dest, cfg.dest, next.position) <= cfg.dest_radius_m) {
    done = Termination::reached_dest;
  } else if (actions_taken >= cfg.max_len) {
    done = Termination::max_len;
  } else if (!inside) {
    done = Termination::out_of_bounds;
  }

  if (inside) {
    next.features = cfg.grid->at(next.position, next.timestamp);
  } else if (finite) {
    next.features = cfg.grid->at_clamped(next.position, next.timestamp);
  } else {
    next.features = s.features;  // terminal filler; never fed to the policy
  }
  return {next, done};
}

Episode run_episode(const GaussianPolicy& pi, const EnrichedState& start,
                    const FeatureVector& extra, const EnvConfig& cfg, Rng& rng) {
  Episode ep;
  ep.extra = extra;
  ep.states.push_back(start);
  EnrichedState state = start;
  while (true) {
    const std::vector<double> z = pi.input_stats.zscore(policy_input(state, extra));
    const DeltaAction a = policy_sample(pi, z.data(), rng);
    auto [next, done] = step(state, a, cfg, ep.actions.size() + 1);
    ep.actions.push_back(a);
    ep.states.push_back(next);
    state = next;
    if (done != Termination::none) {
      ep.end = done;
      return ep;
    }
  }
}

namespace {

RolloutBatch collect_impl(const GaussianPolicy& pi, const std::vector<Trajectory>& train,
                          const EnvConfig& cfg, std::size_t n_samples, const Rng& rng,
                          bool parallel) {
  if (n_samples < 1) throw std::runtime_error("collect: n_samples must be positive");
  if (train.empty()) throw std::runtime_error("collect: empty training set");

  RolloutBatch batch;
  std::size_t next_episode = 0;
  const std::size_t block = parallel ? 8 : 1;
  std::vector<Episode> staged(block);
  while (batch.n_samples < n_samples) {
    const std::int64_t nb = static_cast<std::int64_t>(block);
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t b = 0; b < nb; ++b) {
      try {
        Rng ep_rng = rng.derive(next_episode + static_cast<std::size_t>(b));
        const std::pair<std::size_t, std::size_t> at = sample_initial(train, ep_rng);
        const Trajectory& traj = train[at.first];
        const FeatureVector extra =
            cfg.use_arrival_features ? traj.arrival_features : FeatureVector{};
        staged[b] = run_episode(pi, traj.states[at.second], extra, cfg, ep_rng);
      } catch (...) {
#pragma omp critical(collect_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    for (std::size_t b = 0; b < block && batch.n_samples < n_samples; ++b) {
      batch.n_samples += staged[b].actions.size();
      batch.episodes.push_back(std::move(staged[b]));
    }
    next_episode += block;
  }
  return batch;
}

}  // namespace

RolloutBatch collect(const GaussianPolicy& pi, const std::vector<Trajectory>& train,
                     const EnvConfig& cfg, std::size_t n_samples, const Rng& rng) {
  return collect_impl(pi, train, cfg, n_samples, rng, true);
}

RolloutBatch collect_serial(const GaussianPolicy& pi, const std::vector<Trajectory>& train,
                            const EnvConfig& cfg, std::size_t n_samples, const Rng& rng) {
  return collect_impl(pi, train, cfg, n_samples, rng, false);
}

}  // namespace trajpred
