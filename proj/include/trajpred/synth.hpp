#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajpred/config.hpp"
#include "trajpred/geo.hpp"
#include "trajpred/weather.hpp"

namespace trajpred {

// One traffic pattern: a lateral arc between the airports plus a cruise
// level. Positive arc offsets bow the route to the left of the direct course.
struct ModeSpec {
  double arc_offset_deg = 0.0;
  double cruise_alt_m = 9000.0;
  double prior = 1.0;
};

// All randomness in the generated geometry flows through these scales, so
// zeroing them makes every trajectory of a mode geometrically identical.
struct NoiseScales {
  double lateral_deg = 0.02;   // per-trajectory apex jitter and wiggle amplitude
  double vertical_m = 150.0;   // per-trajectory cruise level jitter
  double point_deg = 0.0003;   // per-state horizontal noise
  double point_alt_m = 8.0;    // per-state vertical noise
  double speed_frac = 0.05;    // per-trajectory duration multiplier spread
};

struct ScenarioSpec {
  GeoPosition origin = {2.0, 40.2, 150.0};
  GeoPosition dest = {3.2, 41.2, 180.0};
  std::size_t n_trajectories = 100;
  std::vector<ModeSpec> modes = {{0.08, 9000.0, 0.5}, {-0.08, 8200.0, 0.5}};
  NoiseScales noise;
  std::int64_t dt = 10;              // seconds between states
  double base_duration_s = 1200.0;   // nominal flight time
  std::int64_t departure_stagger_s = 3600;  // spacing between departures
  BoundingBox bbox = BoundingBox::from_corners(1.5, 39.8, 3.7, 41.7);
  std::string airport = "DST";
  // Scales the gap between mode-conditional arrival feature means; 0 removes
  // the signal the classifier learns from.
  double arrival_separation = 1.0;
  std::uint64_t seed = 7;
};

void validate(const ScenarioSpec& spec);

// Trajectories per mode by largest remainder on the priors; each must get
// at least 2.
std::vector<std::size_t> mode_counts(const ScenarioSpec& spec);

// A generated corpus with ground truth. Trajectories are raw (no weather
// features attached): positions on the dt lattice plus timestamps, ready for
// the resample/clean/enrich chain.
struct Scenario {
  std::vector<Trajectory> trajectories;
  std::vector<std::size_t> labels;  // true mode per trajectory
  WeatherGrid grid;
  ArrivalConditionsTable arrivals;
};

// Deterministic given spec.seed; trajectory construction is parallel with
// one derived random stream per trajectory.
Scenario generate(const ScenarioSpec& spec);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded split without replacement, stratified by label; index lists come
// back sorted. Throws when either side would be empty.
SplitIndices stratified_split(const std::vector<std::size_t>& labels, double test_fraction,
                              std::uint64_t seed);

// The five arrival condition variables mimicking a destination METAR.
std::vector<std::string> arrival_feature_names();

// Mean arrival feature vector for a mode at the given separation scale.
FeatureVector arrival_mode_mean(std::size_t mode, double separation);

ScenarioSpec scenario_from_config(const KeyValueConfig& cfg);
KeyValueConfig scenario_to_config(const ScenarioSpec& spec);

}  // namespace trajpred
