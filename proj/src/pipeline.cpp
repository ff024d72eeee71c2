#include "trajpred/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <utility>

#include "trajpred/csv.hpp"
#include "trajpred/dtw.hpp"
#include "trajpred/env.hpp"
#include "trajpred/preprocess.hpp"

namespace trajpred {

namespace {

namespace fs = std::filesystem;

// Runtime failures inside a stage surface with the stage name attached;
// configuration problems never reach this wrapper.
template <typename F>
void stage(const std::string& name, F&& body) {
  try {
    body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string join_path(const std::string& dir, const std::string& rel) {
  return (fs::path(dir) / rel).string();
}

std::vector<double> parse_m_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) throw ConfigError("m_list: empty entry in '" + text + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw ConfigError("m_list: bad number '" + cell + "'");
    }
    if (used != cell.size()) throw ConfigError("m_list: bad number '" + cell + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("m_list: no entries");
  return out;
}

std::string format_m_list(const std::vector<double>& ms) {
  std::string out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (i > 0) out += ',';
    out += fmt_double(ms[i]);
  }
  return out;
}

const std::vector<std::string>& known_pipeline_keys() {
  static const std::vector<std::string> keys = {
      "setting",        "scenario_config",   "trajectories_csv",
      "weather_csv",    "arrivals_csv",      "airport",
      "origin_lon",     "origin_lat",        "origin_alt",
      "dest_lon",       "dest_lat",          "dest_alt",
      "bbox_lon_min",   "bbox_lon_max",      "bbox_lat_min",
      "bbox_lat_max",   "dt",                "r_near_m",
      "v_max_ms",       "test_fraction",     "split_seed",
      "k_min",          "k_max",             "forest_trees",
      "forest_max_depth", "forest_min_split", "forest_min_leaf",
      "forest_candidates", "forest_seed",    "gail_iterations",
      "gail_batch_samples", "gail_disc_epochs", "gail_gamma",
      "gail_lambda",    "gail_kl_limit",     "gail_cg_iters",
      "gail_cg_damping", "gail_backtrack_ratio", "gail_backtrack_steps",
      "gail_bc_epochs", "gail_bc_folds",     "gail_value_epochs",
      "gail_disc_lr",   "gail_value_lr",     "gail_checkpoint_every",
      "gail_seed",      "dest_radius_m",     "max_len",
      "m_list",         "repetitions",       "eval_seed",
      "rollout_mean"};
  return keys;
}

std::size_t get_size(const KeyValueConfig& kv, const std::string& key, std::size_t fallback) {
  const std::int64_t v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

EnvConfig env_for(const ModelBundle& b, const WeatherGrid& grid) {
  EnvConfig env;
  env.dt = b.dt;
  env.dest = b.dest;
  env.dest_radius_m = b.dest_radius_m;
  env.max_len = b.max_len;
  env.bbox = b.bbox;
  env.grid = &grid;
  env.use_arrival_features = b.setting == "OnePolicy";
  return env;
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  if (cfg.setting != "MultPolicies" && cfg.setting != "OnePolicy")
    throw ConfigError("setting: expected MultPolicies or OnePolicy, got '" + cfg.setting + "'");
  const bool any_data = !cfg.trajectories_csv.empty() || !cfg.weather_csv.empty() ||
                        !cfg.arrivals_csv.empty();
  const bool all_data = !cfg.trajectories_csv.empty() && !cfg.weather_csv.empty() &&
                        !cfg.arrivals_csv.empty();
  if (any_data && !all_data)
    throw ConfigError("dataset: trajectories_csv, weather_csv and arrivals_csv must be set together");
  if (any_data && !cfg.scenario_config.empty())
    throw ConfigError("dataset: scenario_config conflicts with explicit dataset paths");
  if (cfg.airport.empty()) throw ConfigError("airport: must not be empty");
  if (!position_valid(cfg.origin) || !position_valid(cfg.dest))
    throw ConfigError("route: invalid airport coordinates");
  if (cfg.dt < 1) throw ConfigError("dt: must be at least 1 second");
  if (!(cfg.r_near_m > 0.0)) throw ConfigError("r_near_m: must be positive");
  if (!(cfg.v_max_ms > 0.0)) throw ConfigError("v_max_ms: must be positive");
  if (!(cfg.test_fraction > 0.0) || !(cfg.test_fraction < 1.0))
    throw ConfigError("test_fraction: must lie in (0, 1)");
  if (cfg.k_min < 2) throw ConfigError("k_min: must be at least 2");
  if (cfg.k_max < cfg.k_min) throw ConfigError("k_max: must be at least k_min");
  if (cfg.forest.n_trees < 1) throw ConfigError("forest_trees: must be positive");
  try {
    validate(cfg.gail);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!(cfg.dest_radius_m > 0.0)) throw ConfigError("dest_radius_m: must be positive");
  if (cfg.max_len < 1) throw ConfigError("max_len: must be positive");
  if (cfg.m_list.empty()) throw ConfigError("m_list: must not be empty");
  for (double m : cfg.m_list)
    if (!(m >= 0.0) || !(m < 1.0)) throw ConfigError("m_list: entries must lie in [0, 1)");
  if (cfg.repetitions < 1) throw ConfigError("repetitions: must be positive");
}

PipelineConfig pipeline_from_config(const KeyValueConfig& kv) {
  const auto& known = known_pipeline_keys();
  for (const auto& [key, value] : kv.values) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown key: " + key);
  }

  PipelineConfig cfg;
  try {
    cfg.setting = kv.get_str("setting", cfg.setting);
    cfg.scenario_config = kv.get_str("scenario_config", cfg.scenario_config);
    cfg.trajectories_csv = kv.get_str("trajectories_csv", cfg.trajectories_csv);
    cfg.weather_csv = kv.get_str("weather_csv", cfg.weather_csv);
    cfg.arrivals_csv = kv.get_str("arrivals_csv", cfg.arrivals_csv);
    cfg.airport = kv.get_str("airport", cfg.airport);
    cfg.origin.lon = kv.get_double("origin_lon", cfg.origin.lon);
    cfg.origin.lat = kv.get_double("origin_lat", cfg.origin.lat);
    cfg.origin.alt = kv.get_double("origin_alt", cfg.origin.alt);
    cfg.dest.lon = kv.get_double("dest_lon", cfg.dest.lon);
    cfg.dest.lat = kv.get_double("dest_lat", cfg.dest.lat);
    cfg.dest.alt = kv.get_double("dest_alt", cfg.dest.alt);
    cfg.bbox.lon_min = kv.get_double("bbox_lon_min", cfg.bbox.lon_min);
    cfg.bbox.lon_max = kv.get_double("bbox_lon_max", cfg.bbox.lon_max);
    cfg.bbox.lat_min = kv.get_double("bbox_lat_min", cfg.bbox.lat_min);
    cfg.bbox.lat_max = kv.get_double("bbox_lat_max", cfg.bbox.lat_max);
    cfg.dt = kv.get_int("dt", cfg.dt);
    cfg.r_near_m = kv.get_double("r_near_m", cfg.r_near_m);
    cfg.v_max_ms = kv.get_double("v_max_ms", cfg.v_max_ms);
    cfg.test_fraction = kv.get_double("test_fraction", cfg.test_fraction);
    cfg.split_seed = static_cast<std::uint64_t>(kv.get_int("split_seed", 101));
    cfg.k_min = get_size(kv, "k_min", cfg.k_min);
    cfg.k_max = get_size(kv, "k_max", cfg.k_max);
    cfg.forest.n_trees = static_cast<int>(kv.get_int("forest_trees", cfg.forest.n_trees));
    cfg.forest.max_depth = static_cast<int>(kv.get_int("forest_max_depth", cfg.forest.max_depth));
    cfg.forest.min_split = get_size(kv, "forest_min_split", cfg.forest.min_split);
    cfg.forest.min_leaf = get_size(kv, "forest_min_leaf", cfg.forest.min_leaf);
    cfg.forest.n_candidates = get_size(kv, "forest_candidates", cfg.forest.n_candidates);
    cfg.forest_seed = static_cast<std::uint64_t>(kv.get_int("forest_seed", 7));
    cfg.gail.iterations = static_cast<int>(kv.get_int("gail_iterations", cfg.gail.iterations));
    cfg.gail.batch_samples = get_size(kv, "gail_batch_samples", cfg.gail.batch_samples);
    cfg.gail.disc_epochs = static_cast<int>(kv.get_int("gail_disc_epochs", cfg.gail.disc_epochs));
    cfg.gail.gamma = kv.get_double("gail_gamma", cfg.gail.gamma);
    cfg.gail.lambda = kv.get_double("gail_lambda", cfg.gail.lambda);
    cfg.gail.kl_limit = kv.get_double("gail_kl_limit", cfg.gail.kl_limit);
    cfg.gail.cg_iters = static_cast<int>(kv.get_int("gail_cg_iters", cfg.gail.cg_iters));
    cfg.gail.cg_damping = kv.get_double("gail_cg_damping", cfg.gail.cg_damping);
    cfg.gail.backtrack_ratio = kv.get_double("gail_backtrack_ratio", cfg.gail.backtrack_ratio);
    cfg.gail.backtrack_steps =
        static_cast<int>(kv.get_int("gail_backtrack_steps", cfg.gail.backtrack_steps));
    cfg.gail.bc_epochs = static_cast<int>(kv.get_int("gail_bc_epochs", cfg.gail.bc_epochs));
    cfg.gail.bc_folds = static_cast<int>(kv.get_int("gail_bc_folds", cfg.gail.bc_folds));
    cfg.gail.value_epochs =
        static_cast<int>(kv.get_int("gail_value_epochs", cfg.gail.value_epochs));
    cfg.gail.disc_lr = kv.get_double("gail_disc_lr", cfg.gail.disc_lr);
    cfg.gail.value_lr = kv.get_double("gail_value_lr", cfg.gail.value_lr);
    cfg.gail.checkpoint_every =
        static_cast<int>(kv.get_int("gail_checkpoint_every", cfg.gail.checkpoint_every));
    cfg.gail_seed = static_cast<std::uint64_t>(kv.get_int("gail_seed", 11));
    cfg.dest_radius_m = kv.get_double("dest_radius_m", cfg.dest_radius_m);
    cfg.max_len = get_size(kv, "max_len", cfg.max_len);
    if (kv.has("m_list")) cfg.m_list = parse_m_list(kv.get_str("m_list"));
    cfg.repetitions = static_cast<int>(kv.get_int("repetitions", cfg.repetitions));
    cfg.eval_seed = static_cast<std::uint64_t>(kv.get_int("eval_seed", 2026));
    cfg.rollout_mean = kv.get_bool("rollout_mean", cfg.rollout_mean);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  validate(cfg);
  return cfg;
}

KeyValueConfig pipeline_to_config(const PipelineConfig& cfg) {
  KeyValueConfig kv;
  kv.set("setting", cfg.setting);
  kv.set("scenario_config", cfg.scenario_config);
  kv.set("trajectories_csv", cfg.trajectories_csv);
  kv.set("weather_csv", cfg.weather_csv);
  kv.set("arrivals_csv", cfg.arrivals_csv);
  kv.set("airport", cfg.airport);
  kv.set_double("origin_lon", cfg.origin.lon);
  kv.set_double("origin_lat", cfg.origin.lat);
  kv.set_double("origin_alt", cfg.origin.alt);
  kv.set_double("dest_lon", cfg.dest.lon);
  kv.set_double("dest_lat", cfg.dest.lat);
  kv.set_double("dest_alt", cfg.dest.alt);
  kv.set_double("bbox_lon_min", cfg.bbox.lon_min);
  kv.set_double("bbox_lon_max", cfg.bbox.lon_max);
  kv.set_double("bbox_lat_min", cfg.bbox.lat_min);
  kv.set_double("bbox_lat_max", cfg.bbox.lat_max);
  kv.set_int("dt", cfg.dt);
  kv.set_double("r_near_m", cfg.r_near_m);
  kv.set_double("v_max_ms", cfg.v_max_ms);
  kv.set_double("test_fraction", cfg.test_fraction);
  kv.set_int("split_seed", static_cast<std::int64_t>(cfg.split_seed));
  kv.set_int("k_min", static_cast<std::int64_t>(cfg.k_min));
  kv.set_int("k_max", static_cast<std::int64_t>(cfg.k_max));
  kv.set_int("forest_trees", cfg.forest.n_trees);
  kv.set_int("forest_max_depth", cfg.forest.max_depth);
  kv.set_int("forest_min_split", static_cast<std::int64_t>(cfg.forest.min_split));
  kv.set_int("forest_min_leaf", static_cast<std::int64_t>(cfg.forest.min_leaf));
  kv.set_int("forest_candidates", static_cast<std::int64_t>(cfg.forest.n_candidates));
  kv.set_int("forest_seed", static_cast<std::int64_t>(cfg.forest_seed));
  kv.set_int("gail_iterations", cfg.gail.iterations);
  kv.set_int("gail_batch_samples", static_cast<std::int64_t>(cfg.gail.batch_samples));
  kv.set_int("gail_disc_epochs", cfg.gail.disc_epochs);
  kv.set_double("gail_gamma", cfg.gail.gamma);
  kv.set_double("gail_lambda", cfg.gail.lambda);
  kv.set_double("gail_kl_limit", cfg.gail.kl_limit);
  kv.set_int("gail_cg_iters", cfg.gail.cg_iters);
  kv.set_double("gail_cg_damping", cfg.gail.cg_damping);
  kv.set_double("gail_backtrack_ratio", cfg.gail.backtrack_ratio);
  kv.set_int("gail_backtrack_steps", cfg.gail.backtrack_steps);
  kv.set_int("gail_bc_epochs", cfg.gail.bc_epochs);
  kv.set_int("gail_bc_folds", cfg.gail.bc_folds);
  kv.set_int("gail_value_epochs", cfg.gail.value_epochs);
  kv.set_double("gail_disc_lr", cfg.gail.disc_lr);
  kv.set_double("gail_value_lr", cfg.gail.value_lr);
  kv.set_int("gail_checkpoint_every", cfg.gail.checkpoint_every);
  kv.set_int("gail_seed", static_cast<std::int64_t>(cfg.gail_seed));
  kv.set_double("dest_radius_m", cfg.dest_radius_m);
  kv.set_int("max_len", static_cast<std::int64_t>(cfg.max_len));
  kv.set("m_list", format_m_list(cfg.m_list));
  kv.set_int("repetitions", cfg.repetitions);
  kv.set_int("eval_seed", static_cast<std::int64_t>(cfg.eval_seed));
  kv.set("rollout_mean", cfg.rollout_mean ? "true" : "false");
  return kv;
}

void save_bundle(const std::string& dir, const ModelBundle& bundle) {
  if (bundle.policies.empty()) throw std::runtime_error("save_bundle: no policies");
  fs::create_directories(fs::path(dir) / "policies");
  KeyValueConfig kv;
  kv.set("setting", bundle.setting);
  kv.set("airport", bundle.airport);
  kv.set_double("t_f_s", bundle.t_f_s);
  kv.set_int("dt", bundle.dt);
  kv.set_double("dest_lon", bundle.dest.lon);
  kv.set_double("dest_lat", bundle.dest.lat);
  kv.set_double("dest_alt", bundle.dest.alt);
  kv.set_double("dest_radius_m", bundle.dest_radius_m);
  kv.set_int("max_len", static_cast<std::int64_t>(bundle.max_len));
  kv.set_double("bbox_lon_min", bundle.bbox.lon_min);
  kv.set_double("bbox_lon_max", bundle.bbox.lon_max);
  kv.set_double("bbox_lat_min", bundle.bbox.lat_min);
  kv.set_double("bbox_lat_max", bundle.bbox.lat_max);
  kv.set_int("n_policies", static_cast<std::int64_t>(bundle.policies.size()));
  kv.write_file(join_path(dir, "manifest.txt"));
  for (std::size_t i = 0; i < bundle.policies.size(); ++i)
    save_policy(join_path(dir, "policies/policy_" + std::to_string(i) + ".json"),
                bundle.policies[i]);
  if (!bundle.forest.trees.empty()) {
    fs::create_directories(fs::path(dir) / "classifier");
    save_forest(join_path(dir, "classifier/forest.json"), bundle.forest);
  }
}

ModelBundle load_bundle(const std::string& dir, const std::string& prefix) {
  const KeyValueConfig kv = KeyValueConfig::parse_file(join_path(dir, "manifest.txt"));
  ModelBundle b;
  b.setting = kv.get_str("setting");
  b.airport = kv.get_str("airport");
  b.t_f_s = kv.get_double("t_f_s");
  b.dt = kv.get_int("dt");
  b.dest = {kv.get_double("dest_lon"), kv.get_double("dest_lat"), kv.get_double("dest_alt")};
  b.dest_radius_m = kv.get_double("dest_radius_m");
  b.max_len = static_cast<std::size_t>(kv.get_int("max_len"));
  b.bbox = BoundingBox::from_corners(kv.get_double("bbox_lon_min"), kv.get_double("bbox_lat_min"),
                                     kv.get_double("bbox_lon_max"), kv.get_double("bbox_lat_max"));
  const std::int64_t n = kv.get_int("n_policies");
  if (n < 1) throw std::runtime_error("load_bundle: manifest lists no policies");
  for (std::int64_t i = 0; i < n; ++i)
    b.policies.push_back(
        load_policy(join_path(dir, "policies/" + prefix + "_" + std::to_string(i) + ".json")));
  if (b.setting == "MultPolicies")
    b.forest = load_forest(join_path(dir, "classifier/forest.json"));
  return b;
}

FeatureVector forecast_arrival_features(const ArrivalConditionsTable& arrivals,
                                        const std::string& airport, std::int64_t dep_ts,
                                        double t_f_s) {
  if (!(t_f_s >= 0.0)) throw std::runtime_error("forecast: negative mean flight duration");
  return arrivals.at_time(airport, dep_ts + std::llround(t_f_s));
}

Trajectory actual_suffix(const Trajectory& actual, double m_fraction) {
  const std::size_t i0 = eval_initial_index(actual, m_fraction);
  Trajectory out = actual;
  out.states.assign(actual.states.begin() + static_cast<std::ptrdiff_t>(i0),
                    actual.states.end());
  return out;
}

Trajectory predict_trajectory(const ModelBundle& bundle, const WeatherGrid& grid,
                              const ArrivalConditionsTable& arrivals, const Trajectory& actual,
                              double m_fraction, bool mean_rollout, Rng& rng) {
  if (actual.states.empty()) throw std::runtime_error("predict: empty trajectory");
  if (bundle.policies.empty()) throw std::runtime_error("predict: bundle has no policies");
  const FeatureVector forecast = forecast_arrival_features(
      arrivals, bundle.airport, actual.states.front().timestamp, bundle.t_f_s);

  const GaussianPolicy* pi = nullptr;
  FeatureVector extra;
  if (bundle.setting == "MultPolicies") {
    const std::size_t cls = predict_class(bundle.forest, forecast).first;
    if (cls >= bundle.policies.size())
      throw std::runtime_error("predict: classifier chose cluster " + std::to_string(cls) +
                               " but only " + std::to_string(bundle.policies.size()) +
                               " policies are loaded");
    pi = &bundle.policies[cls];
  } else {
    pi = &bundle.policies.front();
    extra = forecast;
  }

  GaussianPolicy local = *pi;
  if (mean_rollout) local.log_std = -1e3;  // exp underflows to exactly zero

  const EnvConfig env = env_for(bundle, grid);
  const std::size_t i0 = eval_initial_index(actual, m_fraction);
  const Episode ep = run_episode(local, actual.states[i0], extra, env, rng);

  Trajectory pred;
  pred.id = actual.id;
  pred.states = ep.states;
  pred.origin = actual.origin;
  pred.destination = bundle.dest;
  pred.arrival_features = actual.arrival_features;
  return pred;
}

std::vector<MetricsRecord> evaluate_models(const ModelBundle& bundle, const WeatherGrid& grid,
                                           const ArrivalConditionsTable& arrivals,
                                           const std::vector<Trajectory>& test,
                                           const std::vector<double>& m_list, int repetitions,
                                           std::uint64_t eval_seed, bool mean_rollout) {
  if (test.empty()) throw std::runtime_error("evaluate: empty test set");
  if (m_list.empty()) throw std::runtime_error("evaluate: empty m list");
  if (repetitions < 1) throw std::runtime_error("evaluate: repetitions must be positive");
  for (double m : m_list)
    if (!(m >= 0.0) || !(m < 1.0)) throw std::runtime_error("evaluate: m must lie in [0, 1)");

  const std::size_t n_m = m_list.size();
  const std::size_t n_rep = static_cast<std::size_t>(repetitions);
  const std::size_t n_traj = test.size();
  const std::size_t total = n_m * n_rep * n_traj;
  std::vector<MetricsRecord> records(total);
  const Rng root(eval_seed);

  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(total); ++ii) {
    if (failed.load(std::memory_order_relaxed)) continue;
    const std::size_t idx = static_cast<std::size_t>(ii);
    const std::size_t mi = idx / (n_rep * n_traj);
    const std::size_t rep = (idx / n_traj) % n_rep;
    const std::size_t ti = idx % n_traj;
    try {
      Rng rng = root.derive(idx);
      const Trajectory pred = predict_trajectory(bundle, grid, arrivals, test[ti], m_list[mi],
                                                 mean_rollout, rng);
      MetricsRecord rec = compute_metrics(pred, actual_suffix(test[ti], m_list[mi]), bundle.dest,
                                          static_cast<double>(bundle.dt));
      rec.setting = bundle.setting;
      rec.m_level = m_list[mi];
      rec.seed = rep;
      rec.traj_id = test[ti].id;
      records[idx] = std::move(rec);
    } catch (...) {
#pragma omp critical(evaluate_models_error)
      {
        if (!first_error) first_error = std::current_exception();
      }
      failed.store(true, std::memory_order_relaxed);
    }
  }
  if (failed.load()) std::rethrow_exception(first_error);
  return records;
}

void save_grouped_summary(const std::string& path, const std::vector<MetricsRecord>& records,
                          const std::vector<double>& m_list) {
  std::vector<std::string> header = {"setting", "m"};
  for (const auto& cell : summary_csv_header()) header.push_back(cell);
  CsvWriter writer(path, header);
  for (double m : m_list) {
    std::vector<MetricsRecord> group;
    for (const auto& r : records)
      if (r.m_level == m) group.push_back(r);
    if (group.empty()) continue;
    for (const auto& row : aggregate(group)) {
      std::vector<std::string> cells = {group.front().setting, fmt_double(m)};
      for (const auto& cell : summary_csv_row(row)) cells.push_back(cell);
      writer.row(cells);
    }
  }
}

PipelineResult run_pipeline(const PipelineConfig& cfg_in, const std::string& run_dir) {
  validate(cfg_in);
  PipelineConfig cfg = cfg_in;
  const bool synthetic = cfg.trajectories_csv.empty();

  // Scenario resolution is configuration work: a bad scenario file must fail
  // before any artifact exists.
  ScenarioSpec spec;
  if (synthetic) {
    try {
      if (!cfg.scenario_config.empty())
        spec = scenario_from_config(KeyValueConfig::parse_file(cfg.scenario_config));
      validate(spec);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("scenario: ") + e.what());
    }
    cfg.airport = spec.airport;
    cfg.origin = spec.origin;
    cfg.dest = spec.dest;
    cfg.bbox = spec.bbox;
  }

  fs::create_directories(run_dir);
  pipeline_to_config(cfg).write_file(join_path(run_dir, "config.txt"));

  PipelineResult out;
  out.run_dir = run_dir;

  // Whatever the source, the dataset is rewritten under data/ and reloaded
  // from there, so a rerun that ingests this run's artifacts reproduces it.
  std::vector<Trajectory> trajs;
  WeatherGrid grid;
  ArrivalConditionsTable arrivals;
  std::map<std::string, std::size_t> mode_by_id;  // synthetic ground truth
  stage("data", [&] {
    fs::create_directories(fs::path(run_dir) / "data");
    const std::string traj_path = join_path(run_dir, "data/trajectories.csv");
    const std::string weather_path = join_path(run_dir, "data/weather.csv");
    const std::string arrivals_path = join_path(run_dir, "data/arrivals.csv");
    if (synthetic) {
      const Scenario sc = generate(spec);
      scenario_to_config(spec).write_file(join_path(run_dir, "scenario_config.txt"));
      save_trajectories(traj_path, sc.trajectories, {});
      save_weather_grid(weather_path, sc.grid);
      save_arrivals(arrivals_path, sc.arrivals);
      CsvWriter labels(join_path(run_dir, "data/mode_labels.csv"), {"trajectory", "mode"});
      for (std::size_t i = 0; i < sc.trajectories.size(); ++i) {
        labels.row({sc.trajectories[i].id, std::to_string(sc.labels[i])});
        mode_by_id[sc.trajectories[i].id] = sc.labels[i];
      }
    } else {
      const TrajectoryFile tf = load_trajectories(cfg.trajectories_csv);
      save_trajectories(traj_path, tf.trajectories, tf.feature_names);
      save_weather_grid(weather_path, load_weather_grid(cfg.weather_csv));
      save_arrivals(arrivals_path, load_arrivals(cfg.arrivals_csv));
    }
    trajs = load_trajectories(traj_path).trajectories;
    grid = load_weather_grid(weather_path);
    arrivals = load_arrivals(arrivals_path);
    for (auto& t : trajs) {
      t.origin = cfg.origin;
      t.destination = cfg.dest;
    }
  });

  std::vector<Trajectory> kept;
  stage("preprocess", [&] {
    fs::create_directories(fs::path(run_dir) / "preprocess");
    CleanResult cleaned = clean(trajs, PreprocessParams{cfg.dt, cfg.r_near_m, cfg.v_max_ms});
    out.n_rejected = cleaned.rejected.size();
    CsvWriter rejects(join_path(run_dir, "preprocess/rejected.csv"), {"trajectory", "reason"});
    for (const auto& [id, reason] : cleaned.rejected) rejects.row({id, to_string(reason)});
    kept.swap(cleaned.kept);
    if (kept.size() < 4)
      throw std::runtime_error("only " + std::to_string(kept.size()) +
                               " trajectories survived cleaning");
    for (auto& t : kept) {
      t = resample(t, cfg.dt);
      enrich(t, grid);
      attach_arrivals(t, arrivals, cfg.airport);
    }
  });

  std::vector<Trajectory> train, test;
  stage("split", [&] {
    // Synthetic runs stratify on the known modes so every mode reaches the
    // test set; ingested data has no labels and splits uniformly.
    std::vector<std::size_t> strata(kept.size(), 0);
    if (synthetic)
      for (std::size_t i = 0; i < kept.size(); ++i) strata[i] = mode_by_id.at(kept[i].id);
    const SplitIndices split = stratified_split(strata, cfg.test_fraction, cfg.split_seed);
    CsvWriter roles(join_path(run_dir, "preprocess/split.csv"), {"trajectory", "role"});
    for (std::size_t i : split.train) train.push_back(kept[i]);
    for (std::size_t i : split.test) test.push_back(kept[i]);
    for (std::size_t i = 0, a = 0; i < kept.size(); ++i) {
      const bool is_train = a < split.train.size() && split.train[a] == i;
      if (is_train) ++a;
      roles.row({kept[i].id, is_train ? "train" : "test"});
    }
    save_trajectories(join_path(run_dir, "preprocess/train.csv"), train, grid.feature_names);
    save_trajectories(join_path(run_dir, "preprocess/test.csv"), test, grid.feature_names);
    out.n_train = train.size();
    out.n_test = test.size();
  });

  ClusterModel clusters;
  stage("cluster", [&] {
    fs::create_directories(fs::path(run_dir) / "cluster");
    const DistanceMatrix dist = distance_matrix(train, position_dims());
    const std::size_t k_cap = std::min(cfg.k_max, train.size() - 1);
    if (cfg.k_min > k_cap)
      throw std::runtime_error("k_min exceeds the trainable cluster count " +
                               std::to_string(k_cap));
    clusters = select_k(dist, cfg.k_min, k_cap);
    save_cluster_model(join_path(run_dir, "cluster/cluster_model.json"), clusters);
    std::vector<std::string> header = {"trajectory"};
    for (const auto& id : dist.ids) header.push_back(id);
    CsvWriter dm(join_path(run_dir, "cluster/distances.csv"), header);
    for (std::size_t i = 0; i < dist.n; ++i) {
      std::vector<std::string> cells = {dist.ids[i]};
      for (std::size_t j = 0; j < dist.n; ++j) cells.push_back(fmt_double(dist.at(i, j)));
      dm.row(cells);
    }
    out.k = clusters.k;
  });

  ForestModel forest;
  stage("classifier", [&] {
    fs::create_directories(fs::path(run_dir) / "classifier");
    std::vector<FeatureVector> x;
    for (const auto& t : train) x.push_back(t.arrival_features);
    forest = train_forest(x, clusters.labels, arrivals.feature_names, cfg.forest,
                          cfg.forest_seed);
    save_forest(join_path(run_dir, "classifier/forest.json"), forest);
  });

  ModelBundle bundle;
  stage("imitation", [&] {
    fs::create_directories(fs::path(run_dir) / "policies");
    bundle.setting = cfg.setting;
    bundle.airport = cfg.airport;
    bundle.dt = cfg.dt;
    bundle.dest = cfg.dest;
    bundle.dest_radius_m = cfg.dest_radius_m;
    bundle.max_len = cfg.max_len;
    bundle.bbox = cfg.bbox;
    double total_duration = 0.0;
    for (const auto& t : train)
      total_duration +=
          static_cast<double>(t.states.back().timestamp - t.states.front().timestamp);
    bundle.t_f_s = total_duration / static_cast<double>(train.size());

    EnvConfig env;
    env.dt = cfg.dt;
    env.dest = cfg.dest;
    env.dest_radius_m = cfg.dest_radius_m;
    env.max_len = cfg.max_len;
    env.bbox = cfg.bbox;
    env.grid = &grid;
    env.use_arrival_features = cfg.setting == "OnePolicy";

    const Rng root(cfg.gail_seed);
    const std::size_t n_models = cfg.setting == "MultPolicies" ? clusters.k : 1;
    for (std::size_t c = 0; c < n_models; ++c) {
      std::vector<Trajectory> members;
      if (cfg.setting == "MultPolicies") {
        for (std::size_t i = 0; i < train.size(); ++i)
          if (clusters.labels[i] == c) members.push_back(train[i]);
      } else {
        members = train;
      }
      DemoSet demos = build_demos(members, env.use_arrival_features);
      demos.input_names = policy_input_names(
          grid.feature_names,
          env.use_arrival_features ? arrivals.feature_names : std::vector<std::string>{});
      const std::string tag = std::to_string(c);
      const std::string checkpoints =
          cfg.gail.checkpoint_every > 0
              ? join_path(run_dir, "policies/checkpoints_" + tag)
              : std::string();
      const GailResult res =
          train_gail(demos, members, env, cfg.gail, root.derive(c),
                     join_path(run_dir, "policies/diagnostics_" + tag + ".csv"), checkpoints);
      save_policy(join_path(run_dir, "policies/bc_" + tag + ".json"), res.bc_policy);
      save_discriminator(join_path(run_dir, "policies/discriminator_" + tag + ".json"),
                         res.discriminator);
      save_value_net(join_path(run_dir, "policies/value_" + tag + ".json"), res.value);
      bundle.policies.push_back(res.policy);
    }
    if (cfg.setting == "MultPolicies") bundle.forest = forest;
    save_bundle(run_dir, bundle);
  });

  stage("evaluate", [&] {
    fs::create_directories(fs::path(run_dir) / "metrics");
    out.metrics = evaluate_models(bundle, grid, arrivals, test, cfg.m_list, cfg.repetitions,
                                  cfg.eval_seed, cfg.rollout_mean);
    save_metrics(join_path(run_dir, "metrics/metrics.csv"), out.metrics);
    save_grouped_summary(join_path(run_dir, "metrics/summary.csv"), out.metrics, cfg.m_list);
  });

  return out;
}

}  // namespace trajpred
