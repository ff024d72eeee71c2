#include "trajpred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "trajpred/rng.hpp"

namespace trajpred {

namespace {

double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * (3.0 - 2.0 * x);
}

// C1 lateral blend: zero offset and slope at both airports, full offset at
// the route midpoint.
double arc_bump(double u) {
  return u < 0.5 ? smoothstep(2.0 * u) : smoothstep(2.0 * (1.0 - u));
}

// Climb to the cruise level by 30% of the route, hold, descend from 70%.
double altitude_profile(double u, double origin_alt, double cruise_alt, double dest_alt) {
  return origin_alt + (cruise_alt - origin_alt) * smoothstep(u / 0.3) -
         (cruise_alt - dest_alt) * smoothstep((u - 0.7) / 0.3);
}

struct ArrivalModel {
  FeatureVector base;
  FeatureVector sigma;
  FeatureVector delta;  // per-mode mean shift at separation 1
};

const ArrivalModel& arrival_model() {
  static const ArrivalModel m = {
      {12.0, 180.0, 9.0, 15.0, 1013.0},  // wind_speed, wind_dir, visibility, temp, pressure
      {2.0, 15.0, 1.5, 2.0, 3.0},
      {6.0, -45.0, 4.5, -6.0, 9.0},  // 3 sigma per feature
  };
  return m;
}

// Low-frequency random field: per feature, a base level plus two seeded
// harmonics over the normalized grid indices.
void fill_grid_values(WeatherGrid& g, Rng& rng) {
  struct Harmonic {
    double amp, fi, fj, fk, fl, phase;
  };
  const std::vector<std::string> names = {"temp_k", "wind_u", "wind_v"};
  const double bases[] = {260.0, 0.0, 0.0};
  const double scales[] = {12.0, 9.0, 9.0};
  g.feature_names = names;
  g.values.assign(static_cast<std::size_t>(g.n_lon) * g.n_lat * g.n_alt * g.n_t * names.size(),
                  0.0);
  for (std::size_t f = 0; f < names.size(); ++f) {
    Harmonic h[2];
    for (Harmonic& one : h) {
      one.amp = scales[f] * (0.5 + rng.uniform());
      one.fi = 0.2 + 0.8 * rng.uniform();
      one.fj = 0.2 + 0.8 * rng.uniform();
      one.fk = 0.2 + 0.8 * rng.uniform();
      one.fl = 0.2 + 0.8 * rng.uniform();
      one.phase = 2.0 * kPi * rng.uniform();
    }
    for (int i = 0; i < g.n_lon; ++i)
      for (int j = 0; j < g.n_lat; ++j)
        for (int k = 0; k < g.n_alt; ++k)
          for (int l = 0; l < g.n_t; ++l) {
            double v = bases[f];
            for (const Harmonic& one : h) {
              const double arg = 2.0 * kPi *
                                     (one.fi * i / g.n_lon + one.fj * j / g.n_lat +
                                      one.fk * k / g.n_alt + one.fl * l / g.n_t) +
                                 one.phase;
              v += one.amp * std::sin(arg);
            }
            g.cell(i, j, k, l)[f] = v;
          }
  }
}

GeoPosition apex_position(const ScenarioSpec& spec, const ModeSpec& mode) {
  const double dlon = spec.dest.lon - spec.origin.lon;
  const double dlat = spec.dest.lat - spec.origin.lat;
  const double len = std::hypot(dlon, dlat);
  GeoPosition apex;
  apex.lon = 0.5 * (spec.origin.lon + spec.dest.lon) - mode.arc_offset_deg * dlat / len;
  apex.lat = 0.5 * (spec.origin.lat + spec.dest.lat) + mode.arc_offset_deg * dlon / len;
  apex.alt = mode.cruise_alt_m;
  return apex;
}

}  // namespace

void validate(const ScenarioSpec& spec) {
  if (spec.modes.empty()) throw std::runtime_error("scenario: no modes");
  double prior_sum = 0.0;
  for (const ModeSpec& m : spec.modes) {
    if (!(m.prior > 0.0)) throw std::runtime_error("scenario: mode priors must be positive");
    if (!(m.cruise_alt_m > std::max(spec.origin.alt, spec.dest.alt))) {
      throw std::runtime_error("scenario: cruise level must sit above both airports");
    }
    prior_sum += m.prior;
  }
  if (std::abs(prior_sum - 1.0) > 1e-9) {
    throw std::runtime_error("scenario: mode priors must sum to 1");
  }
  if (spec.dt < 1) throw std::runtime_error("scenario: dt must be positive");
  if (!(spec.base_duration_s >= 3.0 * static_cast<double>(spec.dt))) {
    throw std::runtime_error("scenario: base duration must cover at least 3 steps");
  }
  if (spec.departure_stagger_s < 0) {
    throw std::runtime_error("scenario: departure stagger must be non-negative");
  }
  const NoiseScales& z = spec.noise;
  if (z.lateral_deg < 0.0 || z.vertical_m < 0.0 || z.point_deg < 0.0 || z.point_alt_m < 0.0 ||
      z.speed_frac < 0.0) {
    throw std::runtime_error("scenario: noise scales must be non-negative");
  }
  if (z.speed_frac >= 0.5) throw std::runtime_error("scenario: speed_frac must be below 0.5");
  if (spec.arrival_separation < 0.0) {
    throw std::runtime_error("scenario: arrival_separation must be non-negative");
  }
  if (spec.airport.empty()) throw std::runtime_error("scenario: airport key is empty");
  if (!spec.bbox.contains(spec.origin) || !spec.bbox.contains(spec.dest)) {
    throw std::runtime_error("scenario: airports outside the bounding box");
  }
  const double route = std::hypot(spec.dest.lon - spec.origin.lon,
                                  spec.dest.lat - spec.origin.lat);
  if (!(route > 0.0)) throw std::runtime_error("scenario: origin and destination coincide");
  for (const ModeSpec& m : spec.modes) {
    if (!spec.bbox.contains(apex_position(spec, m))) {
      throw std::runtime_error("scenario: mode apex outside the bounding box");
    }
  }
  mode_counts(spec);  // enforces the per-mode minimum
}

std::vector<std::size_t> mode_counts(const ScenarioSpec& spec) {
  const std::size_t k = spec.modes.size();
  std::vector<std::size_t> counts(k, 0);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::size_t assigned = 0;
  for (std::size_t m = 0; m < k; ++m) {
    const double exact = spec.modes[m].prior * static_cast<double>(spec.n_trajectories);
    counts[m] = static_cast<std::size_t>(std::floor(exact));
    remainders[m] = {exact - std::floor(exact), m};
    assigned += counts[m];
  }
  std::sort(remainders.begin(), remainders.end(),
            [](const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second < b.second;
            });
  for (std::size_t r = 0; assigned < spec.n_trajectories; ++r, ++assigned) {
    counts[remainders[r % k].second] += 1;
  }
  for (const std::size_t c : counts) {
    if (c < 2) throw std::runtime_error("scenario: every mode needs at least 2 trajectories");
  }
  return counts;
}

std::vector<std::string> arrival_feature_names() {
  return {"wind_speed_kt", "wind_dir_deg", "visibility_km", "temp_c", "pressure_hpa"};
}

FeatureVector arrival_mode_mean(std::size_t mode, double separation) {
  const ArrivalModel& m = arrival_model();
  FeatureVector out(m.base.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = m.base[j] + static_cast<double>(mode) * separation * m.delta[j];
  }
  return out;
}

Scenario generate(const ScenarioSpec& spec) {
  validate(spec);
  const Rng root(spec.seed);
  Scenario out;

  // Grid extents: one cell of margin around the operating box, altitude up to
  // the highest cruise level, time spanning the staggered departures.
  double max_cruise = 0.0;
  for (const ModeSpec& m : spec.modes) max_cruise = std::max(max_cruise, m.cruise_alt_m);
  const double max_duration =
      spec.base_duration_s * (1.0 + spec.noise.speed_frac) + static_cast<double>(spec.dt);
  const double t_max =
      static_cast<double>(spec.n_trajectories - 1) * static_cast<double>(spec.departure_stagger_s) +
      max_duration;

  WeatherGrid& g = out.grid;
  g.cell_lon = 0.25;
  g.cell_lat = 0.25;
  g.cell_alt = 3000.0;
  g.cell_t = 50000;
  g.origin_lon = spec.bbox.lon_min - g.cell_lon;
  g.origin_lat = spec.bbox.lat_min - g.cell_lat;
  g.origin_alt = 0.0;
  g.origin_t = 0;
  g.n_lon = static_cast<int>(std::ceil((spec.bbox.lon_max + g.cell_lon - g.origin_lon) / g.cell_lon)) + 1;
  g.n_lat = static_cast<int>(std::ceil((spec.bbox.lat_max + g.cell_lat - g.origin_lat) / g.cell_lat)) + 1;
  g.n_alt = static_cast<int>(std::ceil((max_cruise + 4.0 * spec.noise.vertical_m + 500.0) / g.cell_alt)) + 1;
  g.n_t = static_cast<int>(std::ceil(t_max / static_cast<double>(g.cell_t))) + 1;
  {
    Rng grid_rng = root.derive(1);
    fill_grid_values(g, grid_rng);
  }

  const std::vector<std::size_t> counts = mode_counts(spec);
  const std::size_t n = spec.n_trajectories;
  out.labels.resize(n);
  {
    std::size_t at = 0;
    for (std::size_t m = 0; m < counts.size(); ++m) {
      for (std::size_t c = 0; c < counts[m]; ++c) out.labels[at++] = m;
    }
  }

  const double dlon = spec.dest.lon - spec.origin.lon;
  const double dlat = spec.dest.lat - spec.origin.lat;
  const double route_len = std::hypot(dlon, dlat);
  const double norm_lon = -dlat / route_len;  // left of course
  const double norm_lat = dlon / route_len;

  out.trajectories.resize(n);
  const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ii = 0; ii < nn; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    Rng rng = root.derive(1000 + i);
    const ModeSpec& mode = spec.modes[out.labels[i]];
    const NoiseScales& z = spec.noise;

    const double speed_mult = 1.0 + z.speed_frac * (2.0 * rng.uniform() - 1.0);
    const double apex_jit = z.lateral_deg * rng.normal();
    const double cruise = mode.cruise_alt_m + z.vertical_m * rng.normal();
    const double wiggle_amp = z.lateral_deg * rng.normal();
    const double wiggle_phase = 2.0 * kPi * rng.uniform();

    const double duration = spec.base_duration_s * speed_mult;
    const std::size_t n_states =
        std::max<std::size_t>(3, static_cast<std::size_t>(
                                     std::llround(duration / static_cast<double>(spec.dt))) + 1);
    const std::int64_t dep =
        static_cast<std::int64_t>(i) * spec.departure_stagger_s;

    Trajectory t;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%03zu", i);
    t.id = id;
    t.origin = spec.origin;
    t.destination = spec.dest;
    t.states.resize(n_states);
    const double offset = mode.arc_offset_deg + apex_jit;
    for (std::size_t s = 0; s < n_states; ++s) {
      const double u = static_cast<double>(s) / static_cast<double>(n_states - 1);
      const double lateral =
          offset * arc_bump(u) + wiggle_amp * std::sin(2.0 * kPi * u + wiggle_phase) * std::sin(kPi * u);
      EnrichedState& st = t.states[s];
      st.position.lon =
          spec.origin.lon + u * dlon + lateral * norm_lon + z.point_deg * rng.normal();
      st.position.lat =
          spec.origin.lat + u * dlat + lateral * norm_lat + z.point_deg * rng.normal();
      st.position.alt = std::max(
          1.0, altitude_profile(u, spec.origin.alt, cruise, spec.dest.alt) +
                   z.point_alt_m * rng.normal());
      st.timestamp = dep + static_cast<std::int64_t>(s) * spec.dt;
    }
    out.trajectories[i] = std::move(t);
  }

  // Arrival conditions: one row per trajectory at its landing bucket, drawn
  // from the mode's Gaussian.
  const ArrivalModel& am = arrival_model();
  out.arrivals.bucket_seconds = 3600;
  out.arrivals.feature_names = arrival_feature_names();
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = root.derive(500000 + i);
    const FeatureVector mean = arrival_mode_mean(out.labels[i], spec.arrival_separation);
    FeatureVector f(mean.size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = mean[j] + am.sigma[j] * rng.normal();
    const std::int64_t landing = out.trajectories[i].states.back().timestamp;
    const std::int64_t bucket = out.arrivals.bucket_of(landing);
    const auto key = std::make_pair(spec.airport, bucket);
    if (out.arrivals.rows.count(key) != 0) {
      throw std::runtime_error("scenario: two trajectories land in the same arrival bucket; "
                               "increase departure_stagger_s");
    }
    out.arrivals.rows[key] = std::move(f);
  }
  return out;
}

SplitIndices stratified_split(const std::vector<std::size_t>& labels, double test_fraction,
                              std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n < 2) throw std::runtime_error("split: need at least 2 items");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::runtime_error("split: test_fraction must be in (0,1)");
  }
  const std::size_t total_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (total_test == 0 || total_test >= n) {
    throw std::runtime_error("split: fraction leaves one side empty");
  }

  std::size_t n_modes = 0;
  for (const std::size_t l : labels) n_modes = std::max(n_modes, l + 1);
  std::vector<std::vector<std::size_t>> groups(n_modes);
  for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);

  // Per-group test quotas by largest remainder, summing to total_test.
  std::vector<std::size_t> quota(n_modes, 0);
  std::vector<std::pair<double, std::size_t>> rem(n_modes);
  std::size_t assigned = 0;
  for (std::size_t m = 0; m < n_modes; ++m) {
    const double exact = test_fraction * static_cast<double>(groups[m].size());
    quota[m] = static_cast<std::size_t>(std::floor(exact));
    rem[m] = {exact - std::floor(exact), m};
    assigned += quota[m];
  }
  std::sort(rem.begin(), rem.end(),
            [](const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second < b.second;
            });
  for (std::size_t r = 0; assigned < total_test; ++r, ++assigned) {
    quota[rem[r % n_modes].second] += 1;
  }
  for (std::size_t m = 0; m < n_modes; ++m) {
    if (quota[m] > groups[m].size()) {
      throw std::runtime_error("split: quota exceeds a mode's population");
    }
  }

  const Rng root(seed);
  SplitIndices out;
  for (std::size_t m = 0; m < n_modes; ++m) {
    std::vector<std::size_t>& g = groups[m];
    Rng rng = root.derive(m);
    for (std::size_t i = g.size(); i > 1; --i) {
      std::swap(g[i - 1], g[rng.index(i)]);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      (i < quota[m] ? out.test : out.train).push_back(g[i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

namespace {

std::string mode_key(std::size_t i, const char* field) {
  return "mode" + std::to_string(i) + "_" + field;
}

}  // namespace

ScenarioSpec scenario_from_config(const KeyValueConfig& cfg) {
  ScenarioSpec d;  // carries the defaults
  ScenarioSpec s;
  s.origin = {cfg.get_double("origin_lon", d.origin.lon),
              cfg.get_double("origin_lat", d.origin.lat),
              cfg.get_double("origin_alt", d.origin.alt)};
  s.dest = {cfg.get_double("dest_lon", d.dest.lon), cfg.get_double("dest_lat", d.dest.lat),
            cfg.get_double("dest_alt", d.dest.alt)};
  s.n_trajectories =
      static_cast<std::size_t>(cfg.get_int("n_trajectories", static_cast<std::int64_t>(d.n_trajectories)));
  const std::size_t n_modes =
      static_cast<std::size_t>(cfg.get_int("n_modes", static_cast<std::int64_t>(d.modes.size())));
  s.modes.clear();
  for (std::size_t m = 0; m < n_modes; ++m) {
    const ModeSpec base = m < d.modes.size() ? d.modes[m] : ModeSpec{};
    ModeSpec ms;
    ms.arc_offset_deg = cfg.get_double(mode_key(m, "arc_offset"), base.arc_offset_deg);
    ms.cruise_alt_m = cfg.get_double(mode_key(m, "cruise_alt"), base.cruise_alt_m);
    ms.prior = cfg.get_double(mode_key(m, "prior"), base.prior);
    s.modes.push_back(ms);
  }
  s.noise.lateral_deg = cfg.get_double("noise_lateral_deg", d.noise.lateral_deg);
  s.noise.vertical_m = cfg.get_double("noise_vertical_m", d.noise.vertical_m);
  s.noise.point_deg = cfg.get_double("noise_point_deg", d.noise.point_deg);
  s.noise.point_alt_m = cfg.get_double("noise_point_alt_m", d.noise.point_alt_m);
  s.noise.speed_frac = cfg.get_double("noise_speed_frac", d.noise.speed_frac);
  s.dt = cfg.get_int("dt", d.dt);
  s.base_duration_s = cfg.get_double("base_duration_s", d.base_duration_s);
  s.departure_stagger_s = cfg.get_int("departure_stagger_s", d.departure_stagger_s);
  s.bbox = BoundingBox::from_corners(cfg.get_double("bbox_lon_min", d.bbox.lon_min),
                                     cfg.get_double("bbox_lat_min", d.bbox.lat_min),
                                     cfg.get_double("bbox_lon_max", d.bbox.lon_max),
                                     cfg.get_double("bbox_lat_max", d.bbox.lat_max));
  s.airport = cfg.get_str("airport", d.airport);
  s.arrival_separation = cfg.get_double("arrival_separation", d.arrival_separation);
  s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<std::int64_t>(d.seed)));
  return s;
}

KeyValueConfig scenario_to_config(const ScenarioSpec& s) {
  KeyValueConfig c;
  c.set_double("origin_lon", s.origin.lon);
  c.set_double("origin_lat", s.origin.lat);
  c.set_double("origin_alt", s.origin.alt);
  c.set_double("dest_lon", s.dest.lon);
  c.set_double("dest_lat", s.dest.lat);
  c.set_double("dest_alt", s.dest.alt);
  c.set_int("n_trajectories", static_cast<std::int64_t>(s.n_trajectories));
  c.set_int("n_modes", static_cast<std::int64_t>(s.modes.size()));
  for (std::size_t m = 0; m < s.modes.size(); ++m) {
    c.set_double(mode_key(m, "arc_offset"), s.modes[m].arc_offset_deg);
    c.set_double(mode_key(m, "cruise_alt"), s.modes[m].cruise_alt_m);
    c.set_double(mode_key(m, "prior"), s.modes[m].prior);
  }
  c.set_double("noise_lateral_deg", s.noise.lateral_deg);
  c.set_double("noise_vertical_m", s.noise.vertical_m);
  c.set_double("noise_point_deg", s.noise.point_deg);
  c.set_double("noise_point_alt_m", s.noise.point_alt_m);
  c.set_double("noise_speed_frac", s.noise.speed_frac);
  c.set_int("dt", s.dt);
  c.set_double("base_duration_s", s.base_duration_s);
  c.set_int("departure_stagger_s", s.departure_stagger_s);
  c.set_double("bbox_lon_min", s.bbox.lon_min);
  c.set_double("bbox_lat_min", s.bbox.lat_min);
  c.set_double("bbox_lon_max", s.bbox.lon_max);
  c.set_double("bbox_lat_max", s.bbox.lat_max);
  c.set("airport", s.airport);
  c.set_double("arrival_separation", s.arrival_separation);
  c.set_int("seed", static_cast<std::int64_t>(s.seed));
  return c;
}

}  // namespace trajpred
