#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajpred/geo.hpp"

namespace trajpred {

// Prediction accuracy for one (predicted, actual) trajectory pair plus the
// run metadata needed to group records when aggregating.
struct MetricsRecord {
  std::string setting;  // policy configuration under evaluation
  double m_level = 0.0;  // forecast degradation fraction
  std::uint64_t seed = 0;
  std::string traj_id;

  double rmse_lon = 0.0;  // east-axis RMSE, meters
  double rmse_lat = 0.0;  // north-axis RMSE, meters
  double rmse_alt = 0.0;  // vertical RMSE, meters
  double rmse_3d = 0.0;   // RMSE of 3D Euclidean errors, meters
  double ate = 0.0;       // mean along-track error, signed meters
  double cte = 0.0;       // mean cross-track error, signed meters (+ = left)
  double v = 0.0;         // mean vertical error, signed meters (+ = above)
  double eta_error = 0.0;  // |predicted duration - actual duration|, seconds
};

// For each predicted point, the index of its matched actual point: DTW over
// the min-max-scaled position dims, taking the first actual index paired
// with each predicted index on the alignment path.
// Throws when either trajectory is empty.
std::vector<std::size_t> match_points(const Trajectory& pred, const Trajectory& actual);

struct RmseBreakdown {
  double lon = 0.0;
  double lat = 0.0;
  double alt = 0.0;
  double d3 = 0.0;
};

// Per-axis and 3D RMSE over matched pairs, in the ENU frame at ref.
RmseBreakdown rmse(const Trajectory& pred, const Trajectory& actual,
                   const std::vector<std::size_t>& matching, const GeoPosition& ref);

struct TrackErrors {
  double ate = 0.0;
  double cte = 0.0;
  double v = 0.0;
};

// Mean signed errors of matched actual points relative to the predicted
// course. The course at point i is the normalized horizontal ENU step to
// point i+1; the last point reuses the previous course, and degenerate
// (zero horizontal motion) segments borrow the nearest non-degenerate one.
// ate projects onto the course, cte onto its left normal, v is the up
// component. Throws when |pred| < 2 or no segment has horizontal motion.
TrackErrors track_errors(const Trajectory& pred, const Trajectory& actual,
                         const std::vector<std::size_t>& matching, const GeoPosition& ref);

// |dt * (|pred states| - 1) - (actual last timestamp - actual first
// timestamp)|: predicted flight duration against the observed one.
double eta_error(const Trajectory& pred, const Trajectory& actual, double dt);

// match_points + rmse + track_errors + eta_error with the metadata fields
// left for the caller.
MetricsRecord compute_metrics(const Trajectory& pred, const Trajectory& actual,
                              const GeoPosition& ref, double dt);

// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * n) of the
// sorted sample. p in (0, 100].
double percentile_nearest_rank(std::vector<double> values, double p);

struct SummaryRow {
  std::string metric;
  double mean = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p100 = 0.0;
};

// One row per metric (rmse_lon .. eta_error) across all records.
std::vector<SummaryRow> aggregate(const std::vector<MetricsRecord>& records);

std::vector<std::string> metrics_csv_header();
std::vector<std::string> metrics_csv_row(const MetricsRecord& r);
std::vector<std::string> summary_csv_header();
std::vector<std::string> summary_csv_row(const SummaryRow& r);

void save_metrics(const std::string& path, const std::vector<MetricsRecord>& records);
void save_summary(const std::string& path, const std::vector<SummaryRow>& rows);

}  // namespace trajpred
