// Timing comparison of the OpenMP kernels against their serial references.
// Prints one row per kernel: serial seconds, parallel seconds, speedup, and
// whether the outputs matched bitwise. Scale with an optional positional
// factor (default 1).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "trajpred/dtw.hpp"
#include "trajpred/env.hpp"
#include "trajpred/forest.hpp"
#include "trajpred/net.hpp"
#include "trajpred/preprocess.hpp"
#include "trajpred/synth.hpp"

using namespace trajpred;

namespace {

template <typename F>
double seconds_of(F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  body();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* kernel, double serial_s, double parallel_s, bool match) {
  std::printf("%-22s %10.3fs %10.3fs %8.2fx   %s\n", kernel, serial_s, parallel_s,
              parallel_s > 0.0 ? serial_s / parallel_s : 0.0, match ? "bitwise" : "MISMATCH");
}

GaussianPolicy random_policy(std::size_t in_dim, std::uint64_t seed) {
  GaussianPolicy p;
  Rng rng(seed);
  p.mean_net = mlp_init({static_cast<int>(in_dim), 32, 3}, rng);
  p.log_std = 0.9;
  p.input_names.assign(in_dim, "x");
  p.input_stats.names.assign(in_dim, "x");
  p.input_stats.mean.assign(in_dim, 0.0);
  p.input_stats.std_dev.assign(in_dim, 1.0);
  p.input_stats.min_v.assign(in_dim, 0.0);
  p.input_stats.max_v.assign(in_dim, 1.0);
  p.action_stats.names = {"dlon", "dlat", "dalt"};
  p.action_stats.mean = {0.004, 0.004, 0.0};
  p.action_stats.std_dev = {0.002, 0.002, 10.0};
  p.action_stats.min_v = {0.0, 0.0, 0.0};
  p.action_stats.max_v = {1.0, 1.0, 1.0};
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  const int scale = argc > 1 ? std::atoi(argv[1]) : 1;
  if (scale < 1) {
    std::fprintf(stderr, "usage: %s [scale>=1]\n", argv[0]);
    return 2;
  }
#ifdef _OPENMP
  std::printf("threads: %d, scale: %d\n\n", omp_get_max_threads(), scale);
#else
  std::printf("threads: 1 (no OpenMP), scale: %d\n\n", scale);
#endif
  std::printf("%-22s %11s %11s %9s   %s\n", "kernel", "serial", "parallel", "speedup", "check");

  ScenarioSpec spec;
  spec.n_trajectories = static_cast<std::size_t>(24 * scale);
  spec.base_duration_s = 900.0;
  const Scenario sc = generate(spec);

  {
    DistanceMatrix ser, par;
    const double ts = seconds_of(
        [&] { ser = distance_matrix_serial(sc.trajectories, position_dims()); });
    const double tp =
        seconds_of([&] { par = distance_matrix(sc.trajectories, position_dims()); });
    report("distance_matrix", ts, tp, par.d == ser.d && par.ids == ser.ids);
  }

  {
    std::vector<FeatureVector> x;
    std::vector<std::size_t> y;
    Rng rng(42);
    const std::size_t rows = static_cast<std::size_t>(400 * scale);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t cls = i % 3;
      FeatureVector row(6);
      for (double& v : row) v = static_cast<double>(cls) * 2.0 + rng.normal();
      x.push_back(row);
      y.push_back(cls);
    }
    const std::vector<std::string> names = {"a", "b", "c", "d", "e", "f"};
    ForestParams params;
    params.n_trees = 50;
    ForestModel ser, par;
    const double ts = seconds_of([&] { ser = train_forest_serial(x, y, names, params, 7); });
    const double tp = seconds_of([&] { par = train_forest(x, y, names, params, 7); });
    bool match = ser.trees.size() == par.trees.size();
    for (std::size_t i = 0; match && i < x.size(); ++i)
      match = predict_class(ser, x[i]) == predict_class(par, x[i]);
    report("train_forest", ts, tp, match);
  }

  {
    std::vector<Trajectory> trajs = sc.trajectories;
    for (auto& t : trajs) enrich(t, sc.grid);
    const GaussianPolicy pi = random_policy(4 + sc.grid.feature_names.size(), 11);
    EnvConfig env;
    env.dt = spec.dt;
    env.dest = spec.dest;
    env.dest_radius_m = 5000.0;
    env.max_len = 120;
    env.bbox = spec.bbox;
    env.grid = &sc.grid;
    const std::size_t n_samples = static_cast<std::size_t>(20000 * scale);
    RolloutBatch ser, par;
    const double ts =
        seconds_of([&] { ser = collect_serial(pi, trajs, env, n_samples, Rng(3)); });
    const double tp = seconds_of([&] { par = collect(pi, trajs, env, n_samples, Rng(3)); });
    bool match = ser.n_samples == par.n_samples && ser.episodes.size() == par.episodes.size();
    for (std::size_t e = 0; match && e < ser.episodes.size(); ++e) {
      match = ser.episodes[e].end == par.episodes[e].end &&
              ser.episodes[e].states.size() == par.episodes[e].states.size();
      for (std::size_t i = 0; match && i < ser.episodes[e].states.size(); ++i)
        match = ser.episodes[e].states[i].position.lon == par.episodes[e].states[i].position.lon &&
                ser.episodes[e].states[i].position.alt == par.episodes[e].states[i].position.alt;
    }
    report("collect", ts, tp, match);
  }

  return 0;
}
