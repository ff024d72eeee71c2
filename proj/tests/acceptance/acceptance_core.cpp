// Release gate, part 1 of 3: the fast numerical contracts. Each check prints
// one [PASS]/[FAIL] line with its measurement and wall time; the process
// exits non-zero if any check fails. Every check has an explicit time budget
// so a regression in speed fails the gate just like a regression in math.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "trajpred/cluster.hpp"
#include "trajpred/dtw.hpp"
#include "trajpred/env.hpp"
#include "trajpred/forest.hpp"
#include "trajpred/gail.hpp"
#include "trajpred/geo.hpp"
#include "trajpred/metrics.hpp"
#include "trajpred/net.hpp"
#include "trajpred/policy.hpp"
#include "trajpred/preprocess.hpp"
#include "trajpred/rng.hpp"
#include "trajpred/synth.hpp"
#include "trajpred/weather.hpp"

using namespace trajpred;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Gradient fidelity: central finite differences against the analytic gradient
// of every trainable loss, on small random configurations.

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Perturbs each parameter of `net` in turn and compares the central
// difference of `loss` with the analytic gradient. Restores the parameters.
template <class Loss>
double fd_worst(Mlp& net, const std::vector<double>& analytic, Loss loss) {
  const std::size_t count = mlp_param_count(net);
  std::vector<double> theta(count);
  mlp_get_params(net, theta.data());
  std::vector<double> probe = theta;
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
    probe[i] = theta[i] + h;
    mlp_set_params(net, probe.data());
    const double up = loss();
    probe[i] = theta[i] - h;
    mlp_set_params(net, probe.data());
    const double down = loss();
    probe[i] = theta[i];
    worst = std::max(worst, rel_err(analytic[i], (up - down) / (2.0 * h)));
  }
  mlp_set_params(net, theta.data());
  return worst;
}

Outcome check_gradients() {
  const auto t0 = Clock::now();
  Rng rng(41);
  auto rows_of = [&rng](std::size_t n, std::size_t d) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (auto& r : rows)
      for (double& v : r) v = rng.normal();
    return rows;
  };
  double worst = 0.0;
  int configs = 0;

  // Mean squared error of the raw network output, the regression loss under
  // behavioral cloning. The analytic gradient comes from the reverse pass.
  for (int c = 0; c < 20; ++c) {
    const int in = 2 + static_cast<int>(rng.index(4));
    const int hidden = 3 + static_cast<int>(rng.index(4));
    const int out = 1 + static_cast<int>(rng.index(3));
    const std::size_t n = 3 + rng.index(6);
    Mlp net = mlp_init({in, hidden, out}, rng);
    const auto xs = rows_of(n, static_cast<std::size_t>(in));
    const auto ys = rows_of(n, static_cast<std::size_t>(out));
    auto loss = [&] {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const std::vector<double> f = mlp_forward(net, xs[r].data());
        for (std::size_t k = 0; k < f.size(); ++k) s += (f[k] - ys[r][k]) * (f[k] - ys[r][k]);
      }
      return s / static_cast<double>(n);
    };
    std::vector<double> grad(mlp_param_count(net), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const std::vector<double> f = mlp_forward(net, xs[r].data());
      std::vector<double> up(f.size());
      for (std::size_t k = 0; k < f.size(); ++k)
        up[k] = 2.0 * (f[k] - ys[r][k]) / static_cast<double>(n);
      mlp_backward(net, xs[r].data(), up.data(), grad.data());
    }
    worst = std::max(worst, fd_worst(net, grad, loss));
    ++configs;
  }

  // Gaussian policy log-probability in normalized space, summed over rows.
  for (int c = 0; c < 20; ++c) {
    const int in = 2 + static_cast<int>(rng.index(4));
    const int hidden = 3 + static_cast<int>(rng.index(4));
    const std::size_t n = 3 + rng.index(6);
    GaussianPolicy p;
    p.mean_net = mlp_init({in, hidden, action_dim()}, rng);
    p.log_std = -0.5 + 1.4 * rng.uniform();
    const auto ss = rows_of(n, static_cast<std::size_t>(in));
    const auto as = rows_of(n, static_cast<std::size_t>(action_dim()));
    auto loss = [&] {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += policy_logprob_norm(p, ss[r].data(), as[r].data());
      return s;
    };
    std::vector<double> grad(mlp_param_count(p.mean_net), 0.0);
    for (std::size_t r = 0; r < n; ++r)
      policy_logprob_grad(p, ss[r].data(), as[r].data(), 1.0, grad.data());
    worst = std::max(worst, fd_worst(p.mean_net, grad, loss));
    ++configs;
  }

  // Discriminator binary cross-entropy over random policy/expert rows.
  for (int c = 0; c < 20; ++c) {
    const int in = 2 + static_cast<int>(rng.index(4));
    const int hidden = 3 + static_cast<int>(rng.index(4));
    Discriminator d{mlp_init({in, hidden, 1}, rng)};
    const auto prow = rows_of(3 + rng.index(6), static_cast<std::size_t>(in));
    const auto erow = rows_of(3 + rng.index(6), static_cast<std::size_t>(in));
    std::vector<double> grad(mlp_param_count(d.net), 0.0);
    disc_bce_loss_grad(d, prow, erow, grad);
    auto loss = [&] { return disc_bce_loss(d, prow, erow); };
    worst = std::max(worst, fd_worst(d.net, grad, loss));
    ++configs;
  }

  // Value-function regression onto random targets.
  for (int c = 0; c < 20; ++c) {
    const int in = 2 + static_cast<int>(rng.index(4));
    const int hidden = 3 + static_cast<int>(rng.index(4));
    ValueNet v{mlp_init({in, hidden, 1}, rng)};
    const std::size_t n = 3 + rng.index(6);
    const auto xs = rows_of(n, static_cast<std::size_t>(in));
    std::vector<double> targets(n);
    for (double& t : targets) t = rng.normal();
    std::vector<double> grad(mlp_param_count(v.net), 0.0);
    value_mse_loss_grad(v, xs, targets, grad);
    auto loss = [&] { return value_mse_loss(v, xs, targets); };
    worst = std::max(worst, fd_worst(v.net, grad, loss));
    ++configs;
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst < 1e-4 && secs < 60.0;
  o.detail = std::to_string(configs) + " configs across 4 losses, max rel err " +
             fmt("%.2e", worst) + ", " + fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------
// Dynamic time warping against brute force: walk every monotone path through
// the cost lattice, accumulating point distances in visit order, and keep the
// cheapest total. Floating-point addition is monotone in either operand, so
// the dynamic program must reproduce this minimum bit for bit.

double point_dist(const FeatureVector& p, const FeatureVector& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double diff = p[k] - q[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double exhaustive_path_min(const std::vector<FeatureVector>& a,
                           const std::vector<FeatureVector>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                   double acc) {
    acc += point_dist(a[i], b[j]);
    const bool last_i = i + 1 == a.size(), last_j = j + 1 == b.size();
    if (last_i && last_j) {
      best = std::min(best, acc);
      return;
    }
    if (!last_i && !last_j) walk(i + 1, j + 1, acc);
    if (!last_i) walk(i + 1, j, acc);
    if (!last_j) walk(i, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

Outcome check_dtw_oracle() {
  const auto t0 = Clock::now();
  Rng rng(42);
  const std::vector<std::size_t> dims = position_dims();
  int exact = 0;
  const int pairs = 200;
  for (int c = 0; c < pairs; ++c) {
    auto make = [&rng](std::size_t len, bool flat_alt) {
      Trajectory t;
      t.id = "t";
      for (std::size_t i = 0; i < len; ++i) {
        EnrichedState s;
        s.position = {2.0 + rng.uniform(), 40.0 + rng.uniform(),
                      flat_alt ? 5000.0 : 1000.0 + 8000.0 * rng.uniform()};
        s.timestamp = static_cast<std::int64_t>(10 * i);
        t.states.push_back(s);
      }
      return t;
    };
    // A tenth of the pairs share a constant altitude, exercising the
    // zero-range branch of the pooled min-max scaling.
    const bool flat = rng.index(10) == 0;
    const Trajectory ta = make(1 + rng.index(6), flat);
    const Trajectory tb = make(1 + rng.index(6), flat);

    std::vector<FeatureVector> pa = extract_dims(ta, dims);
    std::vector<FeatureVector> pb = extract_dims(tb, dims);
    minmax_scale_pair(pa, pb);
    if (dtw(ta, tb, dims).cost == exhaustive_path_min(pa, pb)) ++exact;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = exact == pairs && secs < 60.0;
  o.detail = std::to_string(exact) + "/" + std::to_string(pairs) + " pairs bitwise equal, " +
             fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------
// Advantage estimation: the backward recursion against the explicit
// exponentially weighted series, plus the two closed forms where the blend
// degenerates (pure one-step differences, and undiscounted telescoping).

Outcome check_gae_identities() {
  const auto t0 = Clock::now();
  Rng rng(43);
  double worst = 0.0;
  for (int e = 0; e < 1000; ++e) {
    const std::size_t n = 1 + rng.index(50);
    std::vector<double> rewards(n), values(n + 1);
    for (double& x : rewards) x = rng.normal();
    for (double& x : values) x = rng.normal();
    const double gamma = rng.uniform(), lambda = rng.uniform();
    const AdvantageSeries s = gae(rewards, values, gamma, lambda);
    for (std::size_t t = 0; t < n; ++t) {
      double adv = 0.0, w = 1.0;
      for (std::size_t k = t; k < n; ++k) {
        adv += w * (rewards[k] + gamma * values[k + 1] - values[k]);
        w *= gamma * lambda;
      }
      double tgt = 0.0, g = 1.0;
      for (std::size_t k = t; k < n; ++k) {
        tgt += g * rewards[k];
        g *= gamma;
      }
      tgt += g * values[n];
      worst = std::max({worst, std::abs(adv - s.advantages[t]),
                        std::abs(tgt - s.value_targets[t])});
    }
  }
  if (worst >= 1e-10) {
    return {false, "series mismatch " + fmt("%.2e", worst)};
  }

  // lambda = 0: the advantage collapses to the one-step difference, bitwise.
  int exact_td = 0, cases_td = 0;
  for (int e = 0; e < 50; ++e) {
    const std::size_t n = 1 + rng.index(30);
    std::vector<double> rewards(n), values(n + 1);
    for (double& x : rewards) x = rng.normal();
    for (double& x : values) x = rng.normal();
    const double gamma = rng.uniform();
    const AdvantageSeries s = gae(rewards, values, gamma, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      ++cases_td;
      if (s.advantages[t] == rewards[t] + gamma * values[t + 1] - values[t]) ++exact_td;
    }
  }

  // lambda = gamma = 1 on integer-valued inputs: every operation is exact, so
  // the recursion must equal the telescoped remaining-reward sum.
  int exact_mc = 0, cases_mc = 0;
  for (int e = 0; e < 50; ++e) {
    const std::size_t n = 1 + rng.index(40);
    std::vector<double> rewards(n), values(n + 1);
    for (double& x : rewards) x = static_cast<double>(rng.index(17)) - 8.0;
    for (double& x : values) x = static_cast<double>(rng.index(17)) - 8.0;
    const AdvantageSeries s = gae(rewards, values, 1.0, 1.0);
    for (std::size_t t = 0; t < n; ++t) {
      double remaining = 0.0;
      for (std::size_t k = t; k < n; ++k) remaining += rewards[k];
      cases_mc += 2;
      if (s.advantages[t] == remaining + values[n] - values[t]) ++exact_mc;
      if (s.value_targets[t] == remaining + values[n]) ++exact_mc;
    }
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = exact_td == cases_td && exact_mc == cases_mc && secs < 60.0;
  o.detail = "1000 episodes, max series err " + fmt("%.2e", worst) + "; closed forms " +
             std::to_string(exact_td + exact_mc) + "/" + std::to_string(cases_td + cases_mc) +
             " bitwise, " + fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------
// Policy step contract: across a full adversarial training run every accepted
// step must respect the KL budget and improve the surrogate; and the inner
// linear solver must actually solve random SPD systems.

WeatherGrid corridor_grid() {
  WeatherGrid g;
  g.origin_lon = 1.5;
  g.origin_lat = 39.5;
  g.origin_alt = 0.0;
  g.origin_t = 0;
  g.cell_lon = 1.0;
  g.cell_lat = 1.0;
  g.cell_alt = 10000.0;
  g.cell_t = 100000;
  g.n_lon = 3;
  g.n_lat = 3;
  g.n_alt = 2;
  g.n_t = 2;
  g.feature_names = {"w0", "w1"};
  g.values.resize(3 * 3 * 2 * 2 * 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          double* c = g.cell(i, j, k, l);
          c[0] = 1000.0 * i + 100.0 * j + 10.0 * k + l;
          c[1] = 0.25 * (i + 1) + 0.5 * j + 2.0 * k + l;
        }
  return g;
}

Trajectory corridor_flight(const WeatherGrid& g, const std::string& id, double lat, double dlon) {
  Trajectory t;
  t.id = id;
  double lon = 2.0;
  for (int k = 0; k <= 10; ++k) {
    EnrichedState s;
    s.position = {lon, lat, 1000.0 + 5.0 * k};
    s.timestamp = 5 * k;
    s.features = g.at(s.position, s.timestamp);
    t.states.push_back(s);
    lon += dlon;
  }
  t.origin = t.states.front().position;
  t.destination = t.states.back().position;
  return t;
}

Outcome check_policy_step_contract() {
  const auto t0 = Clock::now();

  WeatherGrid grid = corridor_grid();
  const std::vector<Trajectory> train = {corridor_flight(grid, "e1", 39.98, 0.009),
                                         corridor_flight(grid, "e2", 40.00, 0.010),
                                         corridor_flight(grid, "e3", 40.02, 0.011)};
  const DemoSet demos = build_demos(train, false);

  EnvConfig env;
  env.dt = 5;
  env.dest = {2.1, 40.0, 1100.0};
  env.dest_radius_m = 2500.0;
  env.max_len = 25;
  env.bbox = BoundingBox::from_corners(1.0, 39.0, 4.0, 42.0);
  env.grid = &grid;

  GailConfig cfg;
  cfg.iterations = 200;
  cfg.batch_samples = 600;
  cfg.disc_epochs = 3;
  cfg.bc_epochs = 30;
  cfg.bc_folds = 3;
  cfg.value_epochs = 2;
  cfg.cg_iters = 10;

  const GailResult res = train_gail(demos, train, env, cfg, Rng(4242));
  int accepted = 0, violations = 0;
  double max_kl = 0.0;
  for (const IterationStats& st : res.history) {
    if (!st.accepted) continue;
    ++accepted;
    max_kl = std::max(max_kl, st.kl);
    if (!(st.kl <= cfg.kl_limit) || !(st.surrogate_after >= st.surrogate_before)) ++violations;
  }

  // Conjugate gradient on random SPD systems: A = B^T B / n + I keeps the
  // spectrum bounded away from zero, so n iterations must be plenty.
  Rng rng(44);
  double worst_res = 0.0;
  for (int sys = 0; sys < 50; ++sys) {
    const std::size_t n = 2 + rng.index(199);
    std::vector<double> B(n * n);
    for (double& x : B) x = rng.normal();
    std::vector<double> A(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          A[i * n + j] += B[k * n + i] * B[k * n + j] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) A[i * n + i] += 1.0;

    auto hvp = [&](const std::vector<double>& x) {
      std::vector<double> y(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) y[i] += A[i * n + j] * x[j];
      return y;
    };
    std::vector<double> g(n);
    for (double& x : g) x = rng.normal();

    const std::vector<double> x = conjugate_gradient(hvp, g, static_cast<int>(n), 1e-10);
    const std::vector<double> ax = hvp(x);
    double rn = 0.0, gn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rn += (ax[i] - g[i]) * (ax[i] - g[i]);
      gn += g[i] * g[i];
    }
    worst_res = std::max(worst_res, std::sqrt(rn / gn));
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = res.history.size() == 200 && accepted >= 1 && violations == 0 && worst_res < 1e-6 &&
           secs < 300.0;
  o.detail = std::to_string(accepted) + "/200 steps accepted, " + std::to_string(violations) +
             " contract violations, max kl " + fmt("%.4f", max_kl) + " vs budget " +
             fmt("%.4f", cfg.kl_limit) + "; cg max rel residual " + fmt("%.2e", worst_res) + ", " +
             fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------
// Cluster recovery: the default two-mode corpus must come back as exactly two
// clusters matching the generator's labels.

Outcome check_cluster_recovery() {
  const auto t0 = Clock::now();
  const ScenarioSpec spec;  // defaults: 100 trajectories, two modes
  const Scenario sc = generate(spec);
  const DistanceMatrix dist = distance_matrix(sc.trajectories, position_dims());
  const ClusterModel model = select_k(dist, 2, 6);
  const double ari = adjusted_rand_index(model.labels, sc.labels);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = model.k == 2 && ari == 1.0 && secs < 120.0;
  o.detail = "selected k=" + std::to_string(model.k) + ", ari " + fmt("%.3f", ari) + " on " +
             std::to_string(sc.trajectories.size()) + " trajectories, " + fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------
// Classifier accuracy: mean held-out accuracy of the forest on arrival
// conditions across independently seeded corpora and splits.

Outcome check_classifier_accuracy() {
  const auto t0 = Clock::now();
  double total = 0.0, lowest = 1.0;
  const int runs = 20;
  for (int run = 0; run < runs; ++run) {
    ScenarioSpec spec;
    spec.seed = 100 + static_cast<std::uint64_t>(run);
    Scenario sc = generate(spec);
    std::vector<FeatureVector> xs(sc.trajectories.size());
    for (std::size_t i = 0; i < sc.trajectories.size(); ++i) {
      attach_arrivals(sc.trajectories[i], sc.arrivals, spec.airport);
      xs[i] = sc.trajectories[i].arrival_features;
    }
    const SplitIndices split = stratified_split(sc.labels, 0.3, 900 + static_cast<std::uint64_t>(run));
    std::vector<FeatureVector> xtr, xte;
    std::vector<std::size_t> ytr, yte;
    for (std::size_t i : split.train) {
      xtr.push_back(xs[i]);
      ytr.push_back(sc.labels[i]);
    }
    for (std::size_t i : split.test) {
      xte.push_back(xs[i]);
      yte.push_back(sc.labels[i]);
    }
    ForestParams params;
    params.n_trees = 50;
    const ForestModel forest =
        train_forest(xtr, ytr, arrival_feature_names(), params, 500 + static_cast<std::uint64_t>(run));
    int correct = 0;
    for (std::size_t i = 0; i < xte.size(); ++i)
      if (predict_class(forest, xte[i]).first == yte[i]) ++correct;
    const double acc = static_cast<double>(correct) / static_cast<double>(xte.size());
    total += acc;
    lowest = std::min(lowest, acc);
  }
  const double mean = total / runs;
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = mean >= 0.95 && secs < 60.0;
  o.detail = "mean accuracy " + fmt("%.4f", mean) + " (min " + fmt("%.4f", lowest) + ") over " +
             std::to_string(runs) + " runs, " + fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------
// Error decomposition: along- and cross-track components must recombine into
// the horizontal matched distance, and the time-of-arrival error must be an
// exact function of step count and observed duration.
//
// Fixtures are straight tracks with a constant geographic offset between
// prediction and truth, so every matched pair shares one error vector and
// the reported means equal the per-pair values. Eastbound fixtures go
// through the point matcher (the latitude separation provably pins it to the
// diagonal); fixtures at arbitrary headings pass the diagonal matching
// explicitly, since pooled min-max scaling can legitimately warp the match
// when the offset is large against one axis of a slanted track.

Outcome check_error_decomposition() {
  const auto t0 = Clock::now();
  Rng rng(46);
  const GeoPosition ref = {3.2, 41.2, 180.0};
  const double two_pi = 6.283185307179586476925286766559;

  double worst = 0.0;
  int fixtures = 0, off_diagonal = 0;
  for (int c = 0; c < 600; ++c) {
    const std::size_t n = 3 + rng.index(8);
    const double step = 0.004 + 0.02 * rng.uniform();
    const bool east_only = c < 300;
    const double heading = east_only ? 0.0 : two_pi * rng.uniform();
    const double dlon = step * std::cos(heading);
    const double dlat = step * std::sin(heading);
    const double lon0 = 2.0 + rng.uniform(), lat0 = 40.0 + rng.uniform();
    const double alt0 = 4000.0 + 4000.0 * rng.uniform();
    const double dalt = (rng.uniform() - 0.5) * 60.0;

    const double rho = (0.2 + 0.8 * rng.uniform()) * 0.15 * step;
    const double along = (rng.uniform() - 0.5) * 0.1 * step / static_cast<double>(n);
    const double olon = -std::sin(heading) * rho + std::cos(heading) * along;
    const double olat = std::cos(heading) * rho + std::sin(heading) * along;
    const double oalt = (rng.uniform() - 0.5) * 30.0;

    Trajectory pred, act;
    pred.id = act.id = "f";
    for (std::size_t i = 0; i < n; ++i) {
      const double fi = static_cast<double>(i);
      EnrichedState p, a;
      p.position = {lon0 + fi * dlon, lat0 + fi * dlat, alt0 + fi * dalt};
      p.timestamp = static_cast<std::int64_t>(10 * i);
      a.position = {p.position.lon + olon, p.position.lat + olat, p.position.alt + oalt};
      a.timestamp = p.timestamp;
      pred.states.push_back(p);
      act.states.push_back(a);
    }

    std::vector<std::size_t> matching(n);
    for (std::size_t i = 0; i < n; ++i) matching[i] = i;
    if (east_only) {
      const std::vector<std::size_t> matched = match_points(pred, act);
      if (matched != matching) {
        ++off_diagonal;
        continue;
      }
    }

    const TrackErrors te = track_errors(pred, act, matching, ref);
    const EnuVector p0 = to_enu(ref, pred.states[0].position);
    const EnuVector a0 = to_enu(ref, act.states[0].position);
    const double ee = a0.east - p0.east, en = a0.north - p0.north;
    const double want = ee * ee + en * en;
    const double got = te.ate * te.ate + te.cte * te.cte;
    worst = std::max(worst, std::abs(got - want) / want);
    ++fixtures;
  }

  // Arrival-time error: exactly |dt * (predicted steps) - observed duration|.
  int eta_exact = 0;
  const int eta_cases = 200;
  const double dts[] = {1.0, 5.0, 10.0, 30.0};
  for (int c = 0; c < eta_cases; ++c) {
    const std::size_t lp = 2 + rng.index(119);
    const std::size_t la = 2 + rng.index(40);
    const double dt = dts[rng.index(4)];
    Trajectory pred, act;
    pred.id = act.id = "e";
    pred.states.resize(lp);
    std::int64_t ts = static_cast<std::int64_t>(rng.index(1000));
    for (std::size_t i = 0; i < la; ++i) {
      EnrichedState s;
      s.timestamp = ts;
      act.states.push_back(s);
      ts += 1 + static_cast<std::int64_t>(rng.index(120));
    }
    const double want = std::abs(
        dt * static_cast<double>(lp - 1) -
        static_cast<double>(act.states.back().timestamp - act.states.front().timestamp));
    if (eta_error(pred, act, dt) == want) ++eta_exact;
  }

  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = off_diagonal == 0 && worst < 1e-9 && eta_exact == eta_cases && secs < 60.0;
  o.detail = std::to_string(fixtures) + " fixtures, max rel err " + fmt("%.2e", worst) + ", " +
             std::to_string(off_diagonal) + " warped matchings; eta exact " +
             std::to_string(eta_exact) + "/" + std::to_string(eta_cases) + ", " +
             fmt("%.1f s", secs);
  return o;
}

}  // namespace

int main() {
  struct Check {
    const char* name;
    Outcome (*run)();
  };
  const Check checks[] = {
      {"gradient fidelity", check_gradients},
      {"dtw path oracle", check_dtw_oracle},
      {"advantage estimator identities", check_gae_identities},
      {"policy step contract", check_policy_step_contract},
      {"cluster recovery", check_cluster_recovery},
      {"classifier accuracy", check_classifier_accuracy},
      {"error decomposition", check_error_decomposition},
  };
  int failures = 0;
  for (const Check& c : checks) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
