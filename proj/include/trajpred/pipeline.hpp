#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajpred/cluster.hpp"
#include "trajpred/config.hpp"
#include "trajpred/forest.hpp"
#include "trajpred/gail.hpp"
#include "trajpred/geo.hpp"
#include "trajpred/metrics.hpp"
#include "trajpred/rng.hpp"
#include "trajpred/synth.hpp"
#include "trajpred/weather.hpp"

namespace trajpred {

// Configuration problems (bad keys, inconsistent values) are reported apart
// from runtime stage failures so the CLI can map them to distinct exit codes.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline stage failed after configuration was accepted. Artifacts written
// before the failure stay on disk.
struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string stage_name, const std::string& what)
      : std::runtime_error(stage_name + ": " + what), stage(std::move(stage_name)) {}
};

// End-to-end run settings. Data comes from either a synthetic scenario
// (trajectories_csv empty) or an existing dataset on disk. Training
// hyperparameters default to the production values; tests override them to
// desk scale through the same keys.
struct PipelineConfig {
  std::string setting = "MultPolicies";  // or "OnePolicy"

  // Synthesis: scenario settings file, empty for the built-in default.
  std::string scenario_config;
  // Ingest: when trajectories_csv is set, all three paths must be.
  std::string trajectories_csv;
  std::string weather_csv;
  std::string arrivals_csv;

  // Route geometry. Synthetic runs overwrite these from the scenario; ingest
  // runs must supply them (cleaning and the episode environment need the
  // airports and operating area).
  std::string airport = "DST";
  GeoPosition origin = {2.0, 40.2, 150.0};
  GeoPosition dest = {3.2, 41.2, 180.0};
  BoundingBox bbox = BoundingBox::from_corners(1.5, 39.8, 3.7, 41.7);

  std::int64_t dt = 10;          // resampling step, seconds
  double r_near_m = 10000.0;     // endpoint tolerance for cleaning
  double v_max_ms = 350.0;       // speed cap for cleaning
  double test_fraction = 0.1;
  std::uint64_t split_seed = 101;

  std::size_t k_min = 2;  // cluster count search range
  std::size_t k_max = 6;

  ForestParams forest;
  std::uint64_t forest_seed = 7;

  GailConfig gail;
  std::uint64_t gail_seed = 11;

  double dest_radius_m = 5000.0;  // episode capture radius
  std::size_t max_len = 360;      // episode action cap

  std::vector<double> m_list = {0.0, 0.2, 0.5, 0.7};
  int repetitions = 20;
  std::uint64_t eval_seed = 2026;
  bool rollout_mean = false;  // deterministic (mean) rollouts instead of sampling
};

void validate(const PipelineConfig& cfg);
PipelineConfig pipeline_from_config(const KeyValueConfig& kv);
KeyValueConfig pipeline_to_config(const PipelineConfig& cfg);

// Everything a prediction needs besides the weather grid and arrival table:
// the trained policies, the cluster classifier, and the environment settings
// they were trained under. Persisted as a manifest plus model files under a
// run directory.
struct ModelBundle {
  std::string setting;
  std::string airport;
  double t_f_s = 0.0;  // mean training-flight duration, drives forecast lookups
  std::int64_t dt = 10;
  GeoPosition dest;
  double dest_radius_m = 5000.0;
  std::size_t max_len = 360;
  BoundingBox bbox;
  std::vector<GaussianPolicy> policies;  // one per cluster, or a single pooled one
  ForestModel forest;                    // empty for the pooled setting
};

// prefix selects the policy file family inside <dir>/policies (the adversarial
// models are "policy", their cloning inits "bc").
void save_bundle(const std::string& dir, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& dir, const std::string& prefix = "policy");

// Conditions forecast for a flight departing at dep_ts: the arrival-airport
// row at the bucket containing dep_ts + t_f_s.
FeatureVector forecast_arrival_features(const ArrivalConditionsTable& arrivals,
                                        const std::string& airport, std::int64_t dep_ts,
                                        double t_f_s);

// The observed remainder of a flight from the evaluation start index for m.
Trajectory actual_suffix(const Trajectory& actual, double m_fraction);

// One rollout for the flight `actual` degraded by m: pick the policy (per
// class from the forecast conditions, or the pooled one), start at the
// evaluation index, and roll until termination. mean_rollout suppresses the
// action noise. The rollout is deterministic given rng's state.
Trajectory predict_trajectory(const ModelBundle& bundle, const WeatherGrid& grid,
                              const ArrivalConditionsTable& arrivals, const Trajectory& actual,
                              double m_fraction, bool mean_rollout, Rng& rng);

// Full test sweep: repetitions x |m_list| x |test| rollouts, each scored
// against the observed remainder. Parallel over rollouts; record order and
// contents are independent of thread count. The record seed column holds the
// repetition index.
std::vector<MetricsRecord> evaluate_models(const ModelBundle& bundle, const WeatherGrid& grid,
                                           const ArrivalConditionsTable& arrivals,
                                           const std::vector<Trajectory>& test,
                                           const std::vector<double>& m_list, int repetitions,
                                           std::uint64_t eval_seed, bool mean_rollout);

// Summary CSV with one block per m level: setting,m,metric,mean,p25,..,p100.
void save_grouped_summary(const std::string& path, const std::vector<MetricsRecord>& records,
                          const std::vector<double>& m_list);

struct PipelineResult {
  std::string run_dir;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_rejected = 0;
  std::size_t k = 0;  // selected cluster count
  std::vector<MetricsRecord> metrics;
};

// Runs every stage and leaves all artifacts under run_dir: the resolved
// configuration, the dataset, preprocessed splits, cluster model, classifier,
// policies with diagnostics, and the metrics tables. Throws ConfigError
// before any artifact is written, StageError afterwards.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::string& run_dir);

}  // namespace trajpred
