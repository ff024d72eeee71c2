#pragma once

#include <string>
#include <utility>
#include <vector>

#include "trajpred/geo.hpp"
#include "trajpred/weather.hpp"

namespace trajpred {

struct PreprocessParams {
  std::int64_t dt = 5;        // resampling step, seconds
  double r_near_m = 10000.0;  // endpoint tolerance around the airports
  double v_max_ms = 350.0;    // max 3D speed between consecutive states
};

enum class RejectReason { incomplete_start, incomplete_end, speed_violation };
std::string to_string(RejectReason r);

struct CleanResult {
  std::vector<Trajectory> kept;  // input order preserved
  std::vector<std::pair<std::string, RejectReason>> rejected;
};

// Interpolates onto the dt lattice anchored at the first timestamp (constant
// velocity between raw points). Ticks that land on a raw timestamp copy that
// state verbatim, so an already-aligned trajectory passes through unchanged.
// Throws on fewer than 2 states or non-increasing timestamps.
Trajectory resample(const Trajectory& traj, std::int64_t dt);

// Drops trajectories that do not start near the origin, do not end near the
// destination, or move faster than v_max between consecutive states.
CleanResult clean(const std::vector<Trajectory>& trajs, const PreprocessParams& params);

// Fills every state's features from the nearest grid cell. Throws (with the
// trajectory id and state index) when a state falls outside the grid.
void enrich(Trajectory& traj, const WeatherGrid& grid);

// Attaches the conditions observed at the arrival time bucket.
void attach_arrivals(Trajectory& traj, const ArrivalConditionsTable& table,
                     const std::string& airport);

// (state_i, position delta to state_{i+1}) pairs; length |states| - 1.
std::vector<std::pair<EnrichedState, DeltaAction>> derive_actions(const Trajectory& traj);

}  // namespace trajpred
