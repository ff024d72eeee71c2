#include "trajpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trajpred/csv.hpp"
#include "trajpred/dtw.hpp"

namespace trajpred {

namespace {

void check_matching(const Trajectory& pred, const Trajectory& actual,
                    const std::vector<std::size_t>& matching) {
  if (matching.size() != pred.states.size()) {
    throw std::runtime_error("metrics: matching size does not cover the predicted trajectory");
  }
  for (const std::size_t j : matching) {
    if (j >= actual.states.size()) {
      throw std::runtime_error("metrics: matching index outside the actual trajectory");
    }
  }
}

}  // namespace

std::vector<std::size_t> match_points(const Trajectory& pred, const Trajectory& actual) {
  if (pred.states.empty() || actual.states.empty()) {
    throw std::runtime_error("match_points: empty trajectory");
  }
  const DtwResult r = dtw(pred, actual, position_dims());
  std::vector<std::size_t> match(pred.states.size(), actual.states.size());
  for (const auto& [i, j] : r.path) {
    if (match[i] == actual.states.size()) match[i] = j;
  }
  return match;
}

RmseBreakdown rmse(const Trajectory& pred, const Trajectory& actual,
                   const std::vector<std::size_t>& matching, const GeoPosition& ref) {
  check_matching(pred, actual, matching);
  const std::size_t n = pred.states.size();
  if (n == 0) throw std::runtime_error("rmse: empty trajectory");
  double se = 0.0, sn = 0.0, su = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const EnuVector p = to_enu(ref, pred.states[i].position);
    const EnuVector a = to_enu(ref, actual.states[matching[i]].position);
    const double de = a.east - p.east;
    const double dn = a.north - p.north;
    const double du = a.up - p.up;
    se += de * de;
    sn += dn * dn;
    su += du * du;
  }
  RmseBreakdown out;
  out.lon = std::sqrt(se / n);
  out.lat = std::sqrt(sn / n);
  out.alt = std::sqrt(su / n);
  out.d3 = std::sqrt((se + sn + su) / n);
  return out;
}

TrackErrors track_errors(const Trajectory& pred, const Trajectory& actual,
                         const std::vector<std::size_t>& matching, const GeoPosition& ref) {
  check_matching(pred, actual, matching);
  const std::size_t n = pred.states.size();
  if (n < 2) throw std::runtime_error("track_errors: need at least 2 predicted points");

  std::vector<EnuVector> enu(n);
  for (std::size_t i = 0; i < n; ++i) enu[i] = to_enu(ref, pred.states[i].position);

  // Unit course per point: the horizontal step to the next point, the last
  // point reusing the previous segment. Degenerate entries borrow the
  // preceding non-degenerate course, and leading ones the first that exists.
  std::vector<double> ce(n, 0.0), cn(n, 0.0);
  std::vector<bool> ok(n, false);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double de = enu[i + 1].east - enu[i].east;
    const double dn = enu[i + 1].north - enu[i].north;
    const double norm = std::hypot(de, dn);
    if (norm > 0.0) {
      ce[i] = de / norm;
      cn[i] = dn / norm;
      ok[i] = true;
    }
  }
  ce[n - 1] = ce[n - 2];
  cn[n - 1] = cn[n - 2];
  ok[n - 1] = ok[n - 2];
  bool have = false;
  double le = 0.0, ln = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) {
      le = ce[i];
      ln = cn[i];
      have = true;
    } else if (have) {
      ce[i] = le;
      cn[i] = ln;
      ok[i] = true;
    }
  }
  if (!have) throw std::runtime_error("track_errors: predicted trajectory has no horizontal motion");
  for (std::size_t i = n; i-- > 0;) {
    if (ok[i]) {
      le = ce[i];
      ln = cn[i];
    } else {
      ce[i] = le;
      cn[i] = ln;
    }
  }

  TrackErrors out;
  for (std::size_t i = 0; i < n; ++i) {
    const EnuVector a = to_enu(ref, actual.states[matching[i]].position);
    const double ee = a.east - enu[i].east;
    const double en = a.north - enu[i].north;
    out.ate += ee * ce[i] + en * cn[i];
    out.cte += -ee * cn[i] + en * ce[i];  // left normal of the course
    out.v += a.up - enu[i].up;
  }
  out.ate /= static_cast<double>(n);
  out.cte /= static_cast<double>(n);
  out.v /= static_cast<double>(n);
  return out;
}

double eta_error(const Trajectory& pred, const Trajectory& actual, double dt) {
  if (pred.states.empty() || actual.states.empty()) {
    throw std::runtime_error("eta_error: empty trajectory");
  }
  if (!(dt > 0.0)) throw std::runtime_error("eta_error: dt must be positive");
  // A trajectory of N states spans N - 1 steps; identical trajectories must
  // score zero.
  const double predicted = dt * static_cast<double>(pred.states.size() - 1);
  const double actual_duration =
      static_cast<double>(actual.states.back().timestamp - actual.states.front().timestamp);
  return std::abs(predicted - actual_duration);
}

MetricsRecord compute_metrics(const Trajectory& pred, const Trajectory& actual,
                              const GeoPosition& ref, double dt) {
  const std::vector<std::size_t> matching = match_points(pred, actual);
  const RmseBreakdown r = rmse(pred, actual, matching, ref);
  const TrackErrors t = track_errors(pred, actual, matching, ref);
  MetricsRecord out;
  out.traj_id = actual.id;
  out.rmse_lon = r.lon;
  out.rmse_lat = r.lat;
  out.rmse_alt = r.alt;
  out.rmse_3d = r.d3;
  out.ate = t.ate;
  out.cte = t.cte;
  out.v = t.v;
  out.eta_error = eta_error(pred, actual, dt);
  return out;
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw std::runtime_error("percentile: empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw std::runtime_error("percentile: p must be in (0, 100]");
  std::sort(values.begin(), values.end());
  std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * values.size()));
  if (rank < 1) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

std::vector<SummaryRow> aggregate(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw std::runtime_error("aggregate: no records");
  struct Field {
    const char* name;
    double MetricsRecord::*member;
  };
  static const Field kFields[] = {
      {"rmse_lon", &MetricsRecord::rmse_lon}, {"rmse_lat", &MetricsRecord::rmse_lat},
      {"rmse_alt", &MetricsRecord::rmse_alt}, {"rmse_3d", &MetricsRecord::rmse_3d},
      {"ate", &MetricsRecord::ate},           {"cte", &MetricsRecord::cte},
      {"v", &MetricsRecord::v},               {"eta_error", &MetricsRecord::eta_error},
  };
  std::vector<SummaryRow> out;
  for (const Field& f : kFields) {
    std::vector<double> values(records.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      values[i] = records[i].*f.member;
      sum += values[i];
    }
    SummaryRow row;
    row.metric = f.name;
    row.mean = sum / static_cast<double>(records.size());
    row.p25 = percentile_nearest_rank(values, 25.0);
    row.p50 = percentile_nearest_rank(values, 50.0);
    row.p75 = percentile_nearest_rank(values, 75.0);
    row.p100 = percentile_nearest_rank(values, 100.0);
    out.push_back(row);
  }
  return out;
}

std::vector<std::string> metrics_csv_header() {
  return {"setting", "m",   "seed", "trajectory", "rmse_lon", "rmse_lat",
          "rmse_alt", "rmse_3d", "ate",  "cte",        "v",        "eta_error"};
}

std::vector<std::string> metrics_csv_row(const MetricsRecord& r) {
  return {r.setting,
          fmt_double(r.m_level),
          std::to_string(r.seed),
          r.traj_id,
          fmt_double(r.rmse_lon),
          fmt_double(r.rmse_lat),
          fmt_double(r.rmse_alt),
          fmt_double(r.rmse_3d),
          fmt_double(r.ate),
          fmt_double(r.cte),
          fmt_double(r.v),
          fmt_double(r.eta_error)};
}

std::vector<std::string> summary_csv_header() {
  return {"metric", "mean", "p25", "p50", "p75", "p100"};
}

std::vector<std::string> summary_csv_row(const SummaryRow& r) {
  return {r.metric,         fmt_double(r.mean), fmt_double(r.p25),
          fmt_double(r.p50), fmt_double(r.p75),  fmt_double(r.p100)};
}

void save_metrics(const std::string& path, const std::vector<MetricsRecord>& records) {
  CsvWriter w(path, metrics_csv_header());
  for (const MetricsRecord& r : records) w.row(metrics_csv_row(r));
}

void save_summary(const std::string& path, const std::vector<SummaryRow>& rows) {
  CsvWriter w(path, summary_csv_header());
  for (const SummaryRow& r : rows) w.row(summary_csv_row(r));
}

}  // namespace trajpred
