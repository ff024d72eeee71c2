// Command-line front end: full pipeline runs plus standalone stage commands.
// Exit codes: 0 success, 1 stage failure (stage named on stderr), 2 bad
// configuration or usage.

#include <cstdint>
#include <algorithm>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trajpred/cluster.hpp"
#include "trajpred/config.hpp"
#include "trajpred/csv.hpp"
#include "trajpred/dtw.hpp"
#include "trajpred/env.hpp"
#include "trajpred/forest.hpp"
#include "trajpred/gail.hpp"
#include "trajpred/metrics.hpp"
#include "trajpred/pipeline.hpp"
#include "trajpred/preprocess.hpp"
#include "trajpred/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace trajpred;

constexpr int kExitStage = 1;
constexpr int kExitConfig = 2;

std::string join_path(const std::string& dir, const std::string& rel) {
  return (fs::path(dir) / rel).string();
}

// Loads a dataset triple and prepares trajectories the way the pipeline does:
// route endpoints attached, cleaned, resampled, enriched, arrival conditions
// attached. Commands that operate on preprocessed data share this.
struct Dataset {
  std::vector<Trajectory> trajs;
  WeatherGrid grid;
  ArrivalConditionsTable arrivals;
};

struct DatasetArgs {
  std::string trajectories, weather, arrivals;
  std::string airport = "DST";
  GeoPosition origin = {2.0, 40.2, 150.0};
  GeoPosition dest = {3.2, 41.2, 180.0};
  std::int64_t dt = 10;
  double r_near_m = 10000.0;
  double v_max_ms = 350.0;
  bool preprocess = true;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& a) {
  cmd->add_option("--trajectories", a.trajectories, "trajectory CSV")->required();
  cmd->add_option("--weather", a.weather, "weather grid CSV")->required();
  cmd->add_option("--arrivals", a.arrivals, "arrival conditions CSV")->required();
  cmd->add_option("--airport", a.airport, "arrival airport code");
  cmd->add_option("--origin-lon", a.origin.lon, "origin airport longitude");
  cmd->add_option("--origin-lat", a.origin.lat, "origin airport latitude");
  cmd->add_option("--origin-alt", a.origin.alt, "origin airport altitude, m");
  cmd->add_option("--dest-lon", a.dest.lon, "destination airport longitude");
  cmd->add_option("--dest-lat", a.dest.lat, "destination airport latitude");
  cmd->add_option("--dest-alt", a.dest.alt, "destination airport altitude, m");
  cmd->add_option("--dt", a.dt, "resampling step, s");
  cmd->add_option("--r-near", a.r_near_m, "endpoint tolerance, m");
  cmd->add_option("--v-max", a.v_max_ms, "speed cap, m/s");
}

Dataset load_dataset(const DatasetArgs& a) {
  Dataset d;
  d.trajs = load_trajectories(a.trajectories).trajectories;
  d.grid = load_weather_grid(a.weather);
  d.arrivals = load_arrivals(a.arrivals);
  for (auto& t : d.trajs) {
    t.origin = a.origin;
    t.destination = a.dest;
  }
  if (!a.preprocess) return d;
  CleanResult cleaned = clean(d.trajs, PreprocessParams{a.dt, a.r_near_m, a.v_max_ms});
  for (const auto& [id, reason] : cleaned.rejected)
    std::cerr << "rejected " << id << ": " << to_string(reason) << '\n';
  d.trajs.swap(cleaned.kept);
  for (auto& t : d.trajs) {
    t = resample(t, a.dt);
    enrich(t, d.grid);
    attach_arrivals(t, d.arrivals, a.airport);
  }
  return d;
}

int cmd_pipeline(const std::string& config_path, const std::string& out_dir,
                 const std::vector<std::string>& overrides) {
  KeyValueConfig kv;
  try {
    if (!config_path.empty()) kv = KeyValueConfig::parse_file(config_path);
    for (const auto& kvpair : overrides) {
      const std::size_t eq = kvpair.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kvpair);
      kv.set(kvpair.substr(0, eq), kvpair.substr(eq + 1));
    }
    const PipelineConfig cfg = pipeline_from_config(kv);
    const PipelineResult res = run_pipeline(cfg, out_dir);
    std::cout << "run " << res.run_dir << ": " << res.n_train << " train / " << res.n_test
              << " test (" << res.n_rejected << " rejected), k=" << res.k << ", "
              << res.metrics.size() << " metric rows\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StageError& e) {
    std::cerr << "stage failure: " << e.what() << '\n';
    return kExitStage;
  }
}

int cmd_synth(const std::string& scenario_path, const std::string& out_dir) {
  ScenarioSpec spec;
  try {
    if (!scenario_path.empty())
      spec = scenario_from_config(KeyValueConfig::parse_file(scenario_path));
    validate(spec);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const Scenario sc = generate(spec);
  fs::create_directories(out_dir);
  scenario_to_config(spec).write_file(join_path(out_dir, "scenario_config.txt"));
  save_trajectories(join_path(out_dir, "trajectories.csv"), sc.trajectories, {});
  save_weather_grid(join_path(out_dir, "weather.csv"), sc.grid);
  save_arrivals(join_path(out_dir, "arrivals.csv"), sc.arrivals);
  CsvWriter labels(join_path(out_dir, "mode_labels.csv"), {"trajectory", "mode"});
  for (std::size_t i = 0; i < sc.trajectories.size(); ++i)
    labels.row({sc.trajectories[i].id, std::to_string(sc.labels[i])});
  std::cout << sc.trajectories.size() << " trajectories -> " << out_dir << '\n';
  return 0;
}

int cmd_preprocess(const DatasetArgs& args, const std::string& out_path) {
  const Dataset d = load_dataset(args);
  save_trajectories(out_path, d.trajs, d.grid.feature_names);
  std::cout << d.trajs.size() << " trajectories -> " << out_path << '\n';
  return 0;
}

int cmd_cluster(const DatasetArgs& args, std::size_t k_min, std::size_t k_max,
                const std::string& out_path, const std::string& distances_path) {
  const Dataset d = load_dataset(args);
  const DistanceMatrix dist = distance_matrix(d.trajs, position_dims());
  const ClusterModel model = select_k(dist, k_min, k_max);
  save_cluster_model(out_path, model);
  if (!distances_path.empty()) {
    std::vector<std::string> header = {"trajectory"};
    for (const auto& id : dist.ids) header.push_back(id);
    CsvWriter dm(distances_path, header);
    for (std::size_t i = 0; i < dist.n; ++i) {
      std::vector<std::string> cells = {dist.ids[i]};
      for (std::size_t j = 0; j < dist.n; ++j) cells.push_back(fmt_double(dist.at(i, j)));
      dm.row(cells);
    }
  }
  std::cout << "k=" << model.k << " over " << dist.n << " trajectories -> " << out_path << '\n';
  return 0;
}

int cmd_train_classifier(const DatasetArgs& args, const std::string& clusters_path,
                         const ForestParams& params, std::uint64_t seed,
                         const std::string& out_path) {
  const Dataset d = load_dataset(args);
  const ClusterModel clusters = load_cluster_model(clusters_path);
  std::vector<FeatureVector> x;
  std::vector<std::size_t> y;
  for (const auto& t : d.trajs) {
    const auto it = std::find(clusters.ids.begin(), clusters.ids.end(), t.id);
    if (it == clusters.ids.end())
      throw std::runtime_error("trajectory " + t.id + " missing from the cluster model");
    x.push_back(t.arrival_features);
    y.push_back(clusters.labels[static_cast<std::size_t>(it - clusters.ids.begin())]);
  }
  const ForestModel forest = train_forest(x, y, d.arrivals.feature_names, params, seed);
  save_forest(out_path, forest);
  std::cout << forest.trees.size() << " trees over " << x.size() << " trajectories -> "
            << out_path << '\n';
  return 0;
}

struct ImitationArgs {
  DatasetArgs data;
  GailConfig gail;
  std::uint64_t seed = 11;
  double dest_radius_m = 5000.0;
  std::size_t max_len = 360;
  double bbox_lon_min = 1.5, bbox_lat_min = 39.8, bbox_lon_max = 3.7, bbox_lat_max = 41.7;
  bool use_arrivals = false;
};

void add_imitation_options(CLI::App* cmd, ImitationArgs& a) {
  add_dataset_options(cmd, a.data);
  cmd->add_option("--seed", a.seed, "training seed");
  cmd->add_option("--dest-radius", a.dest_radius_m, "episode capture radius, m");
  cmd->add_option("--max-len", a.max_len, "episode action cap");
  cmd->add_option("--bbox-lon-min", a.bbox_lon_min, "operating area west edge");
  cmd->add_option("--bbox-lat-min", a.bbox_lat_min, "operating area south edge");
  cmd->add_option("--bbox-lon-max", a.bbox_lon_max, "operating area east edge");
  cmd->add_option("--bbox-lat-max", a.bbox_lat_max, "operating area north edge");
  cmd->add_flag("--use-arrivals", a.use_arrivals,
                "append arrival conditions to every policy input");
  cmd->add_option("--iterations", a.gail.iterations, "adversarial iterations");
  cmd->add_option("--batch", a.gail.batch_samples, "samples per iteration");
  cmd->add_option("--disc-epochs", a.gail.disc_epochs, "discriminator epochs per iteration");
  cmd->add_option("--bc-epochs", a.gail.bc_epochs, "cloning epochs");
  cmd->add_option("--bc-folds", a.gail.bc_folds, "cloning cross-validation folds");
  cmd->add_option("--value-epochs", a.gail.value_epochs, "value-net epochs per iteration");
  cmd->add_option("--gamma", a.gail.gamma, "discount");
  cmd->add_option("--lambda", a.gail.lambda, "advantage smoothing");
  cmd->add_option("--kl-limit", a.gail.kl_limit, "policy step KL budget");
  cmd->add_option("--checkpoint-every", a.gail.checkpoint_every,
                  "iterations between checkpoints (0 = off)");
}

EnvConfig env_from(const ImitationArgs& a, const WeatherGrid& grid) {
  EnvConfig env;
  env.dt = a.data.dt;
  env.dest = a.data.dest;
  env.dest_radius_m = a.dest_radius_m;
  env.max_len = a.max_len;
  env.bbox = BoundingBox::from_corners(a.bbox_lon_min, a.bbox_lat_min, a.bbox_lon_max,
                                       a.bbox_lat_max);
  env.grid = &grid;
  env.use_arrival_features = a.use_arrivals;
  return env;
}

int cmd_train_bc(const ImitationArgs& args, const std::string& out_path) {
  const Dataset d = load_dataset(args.data);
  DemoSet demos = build_demos(d.trajs, args.use_arrivals);
  demos.input_names = policy_input_names(
      d.grid.feature_names,
      args.use_arrivals ? d.arrivals.feature_names : std::vector<std::string>{});
  const GaussianPolicy policy =
      train_bc(demos, args.gail.bc_epochs, args.gail.bc_folds, Rng(args.seed));
  save_policy(out_path, policy);
  std::cout << demos.inputs.size() << " demos -> " << out_path << '\n';
  return 0;
}

int cmd_train_gail(const ImitationArgs& args, const std::string& out_dir) {
  const Dataset d = load_dataset(args.data);
  DemoSet demos = build_demos(d.trajs, args.use_arrivals);
  demos.input_names = policy_input_names(
      d.grid.feature_names,
      args.use_arrivals ? d.arrivals.feature_names : std::vector<std::string>{});
  fs::create_directories(out_dir);
  const EnvConfig env = env_from(args, d.grid);
  const std::string checkpoints =
      args.gail.checkpoint_every > 0 ? join_path(out_dir, "checkpoints") : std::string();
  const GailResult res = train_gail(demos, d.trajs, env, args.gail, Rng(args.seed),
                                    join_path(out_dir, "diagnostics.csv"), checkpoints);
  save_policy(join_path(out_dir, "policy.json"), res.policy);
  save_policy(join_path(out_dir, "bc.json"), res.bc_policy);
  save_discriminator(join_path(out_dir, "discriminator.json"), res.discriminator);
  save_value_net(join_path(out_dir, "value.json"), res.value);
  std::cout << res.history.size() << " iterations -> " << out_dir << '\n';
  return 0;
}

int cmd_predict(const std::string& run_dir, const DatasetArgs& data_args,
                const std::string& traj_id, double m, std::uint64_t seed, bool mean_rollout,
                const std::string& out_path) {
  const ModelBundle bundle = load_bundle(run_dir);
  const Dataset d = load_dataset(data_args);
  std::vector<Trajectory> preds;
  Rng root(seed);
  for (const auto& t : d.trajs) {
    if (!traj_id.empty() && t.id != traj_id) continue;
    Rng rng = root.derive(preds.size());
    preds.push_back(predict_trajectory(bundle, d.grid, d.arrivals, t, m, mean_rollout, rng));
  }
  if (preds.empty()) throw std::runtime_error("no trajectory matched '" + traj_id + "'");
  save_trajectories(out_path, preds, d.grid.feature_names);
  std::cout << preds.size() << " rollouts -> " << out_path << '\n';
  return 0;
}

int cmd_evaluate(const std::string& run_dir, const DatasetArgs& data_args,
                 const std::string& m_csv, int repetitions, std::uint64_t seed,
                 bool mean_rollout, const std::string& out_dir) {
  const ModelBundle bundle = load_bundle(run_dir);
  const Dataset d = load_dataset(data_args);
  std::vector<double> m_list;
  {
    std::stringstream ss(m_csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) m_list.push_back(std::stod(cell));
  }
  const std::vector<MetricsRecord> records = evaluate_models(
      bundle, d.grid, d.arrivals, d.trajs, m_list, repetitions, seed, mean_rollout);
  fs::create_directories(out_dir);
  save_metrics(join_path(out_dir, "metrics.csv"), records);
  save_grouped_summary(join_path(out_dir, "summary.csv"), records, m_list);
  std::cout << records.size() << " metric rows -> " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory clustering, classification and imitation pipeline"};
  app.require_subcommand(1);

  // pipeline
  std::string pl_config, pl_out;
  std::vector<std::string> pl_overrides;
  auto* pipeline = app.add_subcommand("pipeline", "run every stage into a run directory");
  pipeline->add_option("--config", pl_config, "pipeline settings file");
  pipeline->add_option("--out", pl_out, "run directory")->required();
  pipeline->add_option("--set", pl_overrides, "override a settings key (key=value)");

  // synth
  std::string sy_config, sy_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", sy_config, "scenario settings file");
  synth->add_option("--out-dir", sy_out, "output directory")->required();

  // preprocess
  DatasetArgs pp_args;
  std::string pp_out;
  auto* preprocess = app.add_subcommand("preprocess", "clean, resample, enrich, attach arrivals");
  add_dataset_options(preprocess, pp_args);
  preprocess->add_option("--out", pp_out, "output trajectory CSV")->required();

  // cluster
  DatasetArgs cl_args;
  std::size_t cl_kmin = 2, cl_kmax = 6;
  std::string cl_out, cl_dist;
  auto* cluster = app.add_subcommand("cluster", "agglomerate and pick the cluster count");
  add_dataset_options(cluster, cl_args);
  cluster->add_option("--k-min", cl_kmin, "smallest candidate cluster count");
  cluster->add_option("--k-max", cl_kmax, "largest candidate cluster count");
  cluster->add_option("--out", cl_out, "cluster model JSON")->required();
  cluster->add_option("--distances", cl_dist, "optional distance matrix CSV");

  // train-classifier
  DatasetArgs fo_args;
  std::string fo_clusters, fo_out;
  ForestParams fo_params;
  fo_params.n_trees = 50;
  std::uint64_t fo_seed = 7;
  auto* classifier = app.add_subcommand("train-classifier",
                                        "fit the arrival-conditions cluster classifier");
  add_dataset_options(classifier, fo_args);
  classifier->add_option("--clusters", fo_clusters, "cluster model JSON")->required();
  classifier->add_option("--trees", fo_params.n_trees, "forest size");
  classifier->add_option("--max-depth", fo_params.max_depth, "tree depth cap");
  classifier->add_option("--seed", fo_seed, "training seed");
  classifier->add_option("--out", fo_out, "forest JSON")->required();

  // train-bc
  ImitationArgs bc_args;
  std::string bc_out;
  auto* trainbc = app.add_subcommand("train-bc", "behavioral cloning only");
  add_imitation_options(trainbc, bc_args);
  trainbc->add_option("--out", bc_out, "policy JSON")->required();

  // train-gail
  ImitationArgs ga_args;
  std::string ga_out;
  auto* traingail = app.add_subcommand("train-gail", "adversarial imitation from cloning init");
  add_imitation_options(traingail, ga_args);
  traingail->add_option("--out-dir", ga_out, "output directory")->required();

  // predict
  std::string pr_run, pr_id, pr_out;
  DatasetArgs pr_args;
  double pr_m = 0.0;
  std::uint64_t pr_seed = 1;
  bool pr_mean = false;
  auto* predict = app.add_subcommand("predict", "roll out predictions from a run directory");
  predict->add_option("--run-dir", pr_run, "pipeline run directory")->required();
  add_dataset_options(predict, pr_args);
  predict->add_option("--id", pr_id, "predict only this trajectory");
  predict->add_option("--m", pr_m, "fraction of the flight already flown, [0,1)");
  predict->add_option("--seed", pr_seed, "rollout seed");
  predict->add_flag("--mean", pr_mean, "suppress action noise");
  predict->add_option("--out", pr_out, "predicted trajectory CSV")->required();

  // evaluate
  std::string ev_run, ev_m = "0,0.2,0.5,0.7", ev_out;
  DatasetArgs ev_args;
  int ev_reps = 20;
  std::uint64_t ev_seed = 2026;
  bool ev_mean = false;
  auto* evaluate = app.add_subcommand("evaluate", "score rollouts against observed flights");
  evaluate->add_option("--run-dir", ev_run, "pipeline run directory")->required();
  add_dataset_options(evaluate, ev_args);
  evaluate->add_option("--m-list", ev_m, "comma-separated degradation fractions");
  evaluate->add_option("--repetitions", ev_reps, "rollouts per trajectory and m");
  evaluate->add_option("--seed", ev_seed, "evaluation seed");
  evaluate->add_flag("--mean", ev_mean, "suppress action noise");
  evaluate->add_option("--out-dir", ev_out, "metrics output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*pipeline) return cmd_pipeline(pl_config, pl_out, pl_overrides);
    if (*synth) return cmd_synth(sy_config, sy_out);
    if (*preprocess) return cmd_preprocess(pp_args, pp_out);
    if (*cluster) return cmd_cluster(cl_args, cl_kmin, cl_kmax, cl_out, cl_dist);
    if (*classifier)
      return cmd_train_classifier(fo_args, fo_clusters, fo_params, fo_seed, fo_out);
    if (*trainbc) return cmd_train_bc(bc_args, bc_out);
    if (*traingail) return cmd_train_gail(ga_args, ga_out);
    if (*predict)
      return cmd_predict(pr_run, pr_args, pr_id, pr_m, pr_seed, pr_mean, pr_out);
    if (*evaluate)
      return cmd_evaluate(ev_run, ev_args, ev_m, ev_reps, ev_seed, ev_mean, ev_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return kExitConfig;
}
