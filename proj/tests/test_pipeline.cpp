#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctest.h"
#include "trajpred/csv.hpp"
#include "trajpred/pipeline.hpp"

using namespace trajpred;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// Desk-scale settings over a 16-flight scenario; a full run takes about a
// second.
PipelineConfig desk_config() {
  const std::string scen = "pipeline_scen_test.txt";
  std::ofstream out(scen);
  out << "n_trajectories = 16\nbase_duration_s = 600\n";
  out.close();

  PipelineConfig cfg;
  cfg.scenario_config = scen;
  cfg.test_fraction = 0.25;
  cfg.k_max = 4;
  cfg.forest.n_trees = 10;
  cfg.gail.iterations = 3;
  cfg.gail.batch_samples = 200;
  cfg.gail.disc_epochs = 3;
  cfg.gail.bc_epochs = 20;
  cfg.gail.bc_folds = 3;
  cfg.gail.value_epochs = 2;
  cfg.gail.cg_iters = 5;
  cfg.max_len = 120;
  cfg.m_list = {0.0, 0.5};
  cfg.repetitions = 2;
  return cfg;
}

PipelineResult fresh_run(const PipelineConfig& cfg, const std::string& dir) {
  fs::remove_all(dir);
  return run_pipeline(cfg, dir);
}

std::vector<std::string> record_rows(const std::vector<MetricsRecord>& records) {
  std::vector<std::string> rows;
  for (const auto& r : records) {
    std::string flat;
    for (const auto& cell : metrics_csv_row(r)) flat += cell + "|";
    rows.push_back(flat);
  }
  return rows;
}

}  // namespace

TEST_CASE("pipeline config round trips and rejects malformed settings") {
  PipelineConfig cfg = desk_config();
  cfg.setting = "OnePolicy";
  cfg.rollout_mean = true;
  cfg.m_list = {0.0, 0.25, 0.5};
  const PipelineConfig back = pipeline_from_config(pipeline_to_config(cfg));
  CHECK(back.setting == cfg.setting);
  CHECK(back.scenario_config == cfg.scenario_config);
  CHECK(back.airport == cfg.airport);
  CHECK(back.origin.lon == cfg.origin.lon);
  CHECK(back.dest.alt == cfg.dest.alt);
  CHECK(back.bbox.lat_max == cfg.bbox.lat_max);
  CHECK(back.dt == cfg.dt);
  CHECK(back.test_fraction == cfg.test_fraction);
  CHECK(back.split_seed == cfg.split_seed);
  CHECK(back.k_min == cfg.k_min);
  CHECK(back.k_max == cfg.k_max);
  CHECK(back.forest.n_trees == cfg.forest.n_trees);
  CHECK(back.forest_seed == cfg.forest_seed);
  CHECK(back.gail.iterations == cfg.gail.iterations);
  CHECK(back.gail.batch_samples == cfg.gail.batch_samples);
  CHECK(back.gail.gamma == cfg.gail.gamma);
  CHECK(back.gail_seed == cfg.gail_seed);
  CHECK(back.dest_radius_m == cfg.dest_radius_m);
  CHECK(back.max_len == cfg.max_len);
  CHECK(back.m_list == cfg.m_list);
  CHECK(back.repetitions == cfg.repetitions);
  CHECK(back.eval_seed == cfg.eval_seed);
  CHECK(back.rollout_mean == cfg.rollout_mean);

  SUBCASE("unknown keys are rejected") {
    KeyValueConfig kv;
    kv.set("settnig", "MultPolicies");
    CHECK_THROWS_AS(pipeline_from_config(kv), ConfigError);
  }
  SUBCASE("setting must name a known mode") {
    KeyValueConfig kv;
    kv.set("setting", "TwoPolicies");
    CHECK_THROWS_AS(pipeline_from_config(kv), ConfigError);
  }
  SUBCASE("dataset paths come as a full triple") {
    KeyValueConfig kv;
    kv.set("trajectories_csv", "t.csv");
    CHECK_THROWS_AS(pipeline_from_config(kv), ConfigError);
  }
  SUBCASE("scenario and dataset paths are exclusive") {
    KeyValueConfig kv;
    kv.set("scenario_config", "s.txt");
    kv.set("trajectories_csv", "t.csv");
    kv.set("weather_csv", "w.csv");
    kv.set("arrivals_csv", "a.csv");
    CHECK_THROWS_AS(pipeline_from_config(kv), ConfigError);
  }
  SUBCASE("m entries live in the unit interval") {
    KeyValueConfig kv;
    kv.set("m_list", "0,1.0");
    CHECK_THROWS_AS(pipeline_from_config(kv), ConfigError);
    kv.set("m_list", "0,zero");
    CHECK_THROWS_AS(pipeline_from_config(kv), ConfigError);
    kv.set("m_list", "");
    CHECK_THROWS_AS(pipeline_from_config(kv), ConfigError);
  }
  SUBCASE("numeric bounds map to config errors") {
    PipelineConfig bad = cfg;
    bad.test_fraction = 1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.k_min = 1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.gail.gamma = -0.5;  // nested settings surface as config errors too
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.repetitions = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
  }
}

TEST_CASE("a full run leaves a complete, consistent run directory") {
  const std::string dir = "pipeline_run_full";
  const PipelineConfig cfg = desk_config();
  const PipelineResult res = fresh_run(cfg, dir);

  CHECK(res.run_dir == dir);
  CHECK(res.n_train == 12);
  CHECK(res.n_test == 4);
  CHECK(res.n_rejected == 0);
  CHECK(res.k == 2);
  CHECK(res.metrics.size() == 2 * 2 * 4);  // m levels x repetitions x test flights

  for (const std::string rel : {
           "config.txt", "scenario_config.txt", "manifest.txt", "data/trajectories.csv",
           "data/weather.csv", "data/weather.csv.meta", "data/arrivals.csv",
           "data/mode_labels.csv", "preprocess/rejected.csv", "preprocess/split.csv",
           "preprocess/train.csv", "preprocess/test.csv", "cluster/cluster_model.json",
           "cluster/distances.csv", "classifier/forest.json", "policies/policy_0.json",
           "policies/policy_1.json", "policies/bc_0.json", "policies/bc_1.json",
           "policies/discriminator_0.json", "policies/value_0.json",
           "policies/diagnostics_0.csv", "policies/diagnostics_1.csv", "metrics/metrics.csv",
           "metrics/summary.csv"}) {
    INFO("missing artifact: " << rel);
    CHECK(fs::exists(fs::path(dir) / rel));
  }

  // The resolved configuration echoes the scenario's route.
  const KeyValueConfig resolved = KeyValueConfig::parse_file(dir + "/config.txt");
  CHECK(resolved.get_str("airport") == "DST");
  CHECK(resolved.get_double("dest_lon") == 3.2);
  CHECK(resolved.get_int("gail_iterations") == 3);
  CHECK(resolved.get_str("m_list") == "0,0.5");

  // Stratified split: both modes contribute equally to the test set.
  std::map<std::string, std::string> role, mode;
  {
    std::ifstream in(dir + "/preprocess/split.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const std::size_t c = line.find(',');
      role[line.substr(0, c)] = line.substr(c + 1);
    }
    std::ifstream lm(dir + "/data/mode_labels.csv");
    std::getline(lm, line);
    while (std::getline(lm, line)) {
      const std::size_t c = line.find(',');
      mode[line.substr(0, c)] = line.substr(c + 1);
    }
  }
  std::map<std::string, int> test_per_mode;
  std::set<std::string> test_ids;
  for (const auto& [id, r] : role) {
    if (r != "test") continue;
    test_per_mode[mode.at(id)] += 1;
    test_ids.insert(id);
  }
  CHECK(test_per_mode["0"] == 2);
  CHECK(test_per_mode["1"] == 2);

  // Record fields line up with the sweep.
  for (const auto& rec : res.metrics) {
    CHECK(rec.setting == "MultPolicies");
    CHECK((rec.m_level == 0.0 || rec.m_level == 0.5));
    CHECK(rec.seed < 2);
    CHECK(test_ids.count(rec.traj_id) == 1);
    CHECK(rec.rmse_3d >= 0.0);
    CHECK(rec.eta_error >= 0.0);
  }

  // Summary: one block of 8 metrics per m level, plus the header.
  CHECK(line_count(slurp(dir + "/metrics/summary.csv")) == 1 + 2 * 8);
  CHECK(line_count(slurp(dir + "/metrics/metrics.csv")) == 1 + res.metrics.size());

  // The manifest drives forecasts: mean train duration of the 600 s flights.
  const KeyValueConfig manifest = KeyValueConfig::parse_file(dir + "/manifest.txt");
  CHECK(manifest.get_double("t_f_s") > 400.0);
  CHECK(manifest.get_double("t_f_s") < 800.0);
  CHECK(manifest.get_int("n_policies") == 2);
}

TEST_CASE("identical configurations reproduce every artifact byte for byte") {
  const PipelineConfig cfg = desk_config();
  fresh_run(cfg, "pipeline_run_a");
  fresh_run(cfg, "pipeline_run_b");
  for (const std::string rel :
       {"metrics/metrics.csv", "metrics/summary.csv", "policies/policy_0.json",
        "policies/bc_1.json", "classifier/forest.json", "cluster/cluster_model.json",
        "data/trajectories.csv", "manifest.txt"}) {
    INFO("artifact diverged: " << rel);
    CHECK(slurp("pipeline_run_a/" + rel) == slurp("pipeline_run_b/" + rel));
  }
}

TEST_CASE("a reloaded bundle reproduces the run's evaluation bitwise") {
  const std::string dir = "pipeline_run_reload";
  const PipelineConfig cfg = desk_config();
  const PipelineResult res = fresh_run(cfg, dir);

  const ModelBundle bundle = load_bundle(dir);
  CHECK(bundle.setting == "MultPolicies");
  CHECK(bundle.policies.size() == 2);
  CHECK(bundle.forest.trees.size() == 10);
  CHECK(bundle.dt == cfg.dt);

  const WeatherGrid grid = load_weather_grid(dir + "/data/weather.csv");
  const ArrivalConditionsTable arrivals = load_arrivals(dir + "/data/arrivals.csv");
  const std::vector<Trajectory> test = load_trajectories(dir + "/preprocess/test.csv").trajectories;

  const std::vector<MetricsRecord> again = evaluate_models(
      bundle, grid, arrivals, test, cfg.m_list, cfg.repetitions, cfg.eval_seed, cfg.rollout_mean);
  CHECK(record_rows(again) == record_rows(res.metrics));

  SUBCASE("the cloning snapshots load through the same manifest") {
    const ModelBundle bc = load_bundle(dir, "bc");
    CHECK(bc.policies.size() == 2);
    CHECK(bc.policies[0].input_names == bundle.policies[0].input_names);
  }

  SUBCASE("evaluation is reproducible and thread-count independent") {
    const std::vector<MetricsRecord> third = evaluate_models(
        bundle, grid, arrivals, test, cfg.m_list, cfg.repetitions, cfg.eval_seed,
        cfg.rollout_mean);
    CHECK(record_rows(third) == record_rows(again));
#ifdef _OPENMP
    const int before = omp_get_max_threads();
    omp_set_num_threads(1);
    const std::vector<MetricsRecord> serial = evaluate_models(
        bundle, grid, arrivals, test, cfg.m_list, cfg.repetitions, cfg.eval_seed,
        cfg.rollout_mean);
    omp_set_num_threads(before);
    CHECK(record_rows(serial) == record_rows(again));
#endif
  }
}

TEST_CASE("the pooled setting trains one policy fed with arrival conditions") {
  const std::string dir = "pipeline_run_pooled";
  PipelineConfig cfg = desk_config();
  cfg.setting = "OnePolicy";
  const PipelineResult res = fresh_run(cfg, dir);

  CHECK(fs::exists(dir + "/policies/policy_0.json"));
  CHECK(!fs::exists(dir + "/policies/policy_1.json"));
  for (const auto& rec : res.metrics) CHECK(rec.setting == "OnePolicy");

  const ModelBundle bundle = load_bundle(dir);
  CHECK(bundle.policies.size() == 1);
  CHECK(bundle.forest.trees.empty());
  // Pooled inputs append the five arrival-condition features.
  CHECK(bundle.policies[0].input_names.size() == 4 + 3 + 5);

  const WeatherGrid grid = load_weather_grid(dir + "/data/weather.csv");
  const ArrivalConditionsTable arrivals = load_arrivals(dir + "/data/arrivals.csv");
  const std::vector<Trajectory> test = load_trajectories(dir + "/preprocess/test.csv").trajectories;
  const std::vector<MetricsRecord> again = evaluate_models(
      bundle, grid, arrivals, test, cfg.m_list, cfg.repetitions, cfg.eval_seed, cfg.rollout_mean);
  CHECK(record_rows(again) == record_rows(res.metrics));
}

TEST_CASE("stage failures carry the stage name and keep earlier artifacts") {
  const std::string dir = "pipeline_run_failed";
  PipelineConfig cfg = desk_config();
  cfg.k_min = 20;
  cfg.k_max = 25;
  fs::remove_all(dir);
  bool threw = false;
  try {
    run_pipeline(cfg, dir);
  } catch (const StageError& e) {
    threw = true;
    CHECK(e.stage == "cluster");
  }
  CHECK(threw);
  CHECK(fs::exists(dir + "/config.txt"));
  CHECK(fs::exists(dir + "/data/trajectories.csv"));
  CHECK(fs::exists(dir + "/preprocess/train.csv"));
  CHECK(!fs::exists(dir + "/metrics/metrics.csv"));

  SUBCASE("a missing scenario file fails before the run directory appears") {
    PipelineConfig bad = desk_config();
    bad.scenario_config = "pipeline_no_such_scenario.txt";
    fs::remove_all("pipeline_run_never");
    CHECK_THROWS_AS(run_pipeline(bad, "pipeline_run_never"), ConfigError);
    CHECK(!fs::exists("pipeline_run_never"));
  }
}

TEST_CASE("forecast lookups land in the bucket of departure plus mean duration") {
  ArrivalConditionsTable table;
  table.bucket_seconds = 3600;
  table.feature_names = {"wind"};
  table.rows[{"DST", 0}] = {1.0};
  table.rows[{"DST", 1}] = {2.0};

  CHECK(forecast_arrival_features(table, "DST", 100, 3000.0) == FeatureVector{1.0});
  CHECK(forecast_arrival_features(table, "DST", 1000, 3000.0) == FeatureVector{2.0});
  CHECK_THROWS(forecast_arrival_features(table, "DST", 100, 4 * 3600.0));  // bucket 4 missing
  CHECK_THROWS(forecast_arrival_features(table, "XXX", 100, 0.0));
  CHECK_THROWS(forecast_arrival_features(table, "DST", 100, -1.0));
}

TEST_CASE("the evaluation target is the observed remainder from the m index") {
  Trajectory t;
  t.id = "flight";
  for (int i = 0; i <= 10; ++i) {
    EnrichedState s;
    s.position = {2.0 + 0.01 * i, 40.0, 1000.0};
    s.timestamp = 10 * i;
    t.states.push_back(s);
  }

  const Trajectory full = actual_suffix(t, 0.0);
  CHECK(full.states.size() == 11);
  CHECK(full.id == "flight");

  const Trajectory half = actual_suffix(t, 0.5);
  CHECK(half.states.size() == 6);
  CHECK(half.states.front().timestamp == 50);
  CHECK(half.states.back().timestamp == 100);

  const Trajectory late = actual_suffix(t, 0.99);
  CHECK(late.states.size() == 2);  // floor(0.99 * 10) = 9
}
