#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "trajpred/geo.hpp"
#include "trajpred/weather.hpp"

namespace trajpred {

// Shortest decimal that parses back to the same double (round-trip exact).
std::string fmt_double(double v);
// Fixed-point with the given fractional digit count.
std::string fmt_fixed(double v, int digits);

struct TrajectoryFile {
  std::vector<Trajectory> trajectories;
  std::vector<std::string> feature_names;  // per-state feature columns, may be empty
};

// Rows: traj_id,t,lon,lat,alt[,features...]. Rows of one trajectory are
// contiguous; trajectory order follows first appearance. Degrees are written
// with 10 fractional digits, altitude with 4, features round-trip exact.
TrajectoryFile load_trajectories(const std::string& path);
void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories,
                       const std::vector<std::string>& feature_names);

// Grid CSV (lon_idx,lat_idx,alt_idx,t_idx,features...) plus a key-value
// sidecar at <path>.meta describing the lattice geometry.
WeatherGrid load_weather_grid(const std::string& path);
void save_weather_grid(const std::string& path, const WeatherGrid& grid);

// Arrival conditions CSV: airport,t_bucket,features... The bucket width is
// not part of the format; callers pass it at load time.
ArrivalConditionsTable load_arrivals(const std::string& path, std::int64_t bucket_seconds = 3600);
void save_arrivals(const std::string& path, const ArrivalConditionsTable& table);

// Minimal generic CSV writer used for metrics and diagnostics tables.
// Rows are flushed as written so partial output survives a failed run.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t cols_;
};

}  // namespace trajpred
