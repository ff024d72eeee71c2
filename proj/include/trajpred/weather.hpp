#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "trajpred/geo.hpp"

namespace trajpred {

// Regular 4D lattice (lon, lat, alt, time) of weather feature vectors.
// Stored row-major as [lon][lat][alt][t][feature].
struct WeatherGrid {
  double origin_lon = 0.0, origin_lat = 0.0, origin_alt = 0.0;
  std::int64_t origin_t = 0;
  double cell_lon = 1.0, cell_lat = 1.0, cell_alt = 1.0;
  std::int64_t cell_t = 1;
  int n_lon = 0, n_lat = 0, n_alt = 0, n_t = 0;
  std::vector<std::string> feature_names;
  std::vector<double> values;

  int feature_count() const { return static_cast<int>(feature_names.size()); }
  std::size_t flat_index(int i, int j, int k, int l) const;
  double* cell(int i, int j, int k, int l);
  const double* cell(int i, int j, int k, int l) const;

  // Nearest lattice node per axis; an exact midpoint resolves to the lower
  // index. Throws when the node falls outside the lattice.
  FeatureVector at(const GeoPosition& p, std::int64_t t) const;

  // Same lookup with indices clamped into range; only for states that have
  // already left the operating area (bbox) and just need placeholder values.
  FeatureVector at_clamped(const GeoPosition& p, std::int64_t t) const;

  bool covers(const GeoPosition& p, std::int64_t t) const;
};

// Conditions observed at an airport, bucketed in time. The CSV format carries
// (airport, bucket index) rows; the bucket width is a table attribute supplied
// by the caller (default one hour).
struct ArrivalConditionsTable {
  std::int64_t bucket_seconds = 3600;
  std::vector<std::string> feature_names;
  std::map<std::pair<std::string, std::int64_t>, FeatureVector> rows;

  std::int64_t bucket_of(std::int64_t t) const;  // floor division
  bool has(const std::string& airport, std::int64_t t) const;
  const FeatureVector& at_time(const std::string& airport, std::int64_t t) const;
  const FeatureVector& at_bucket(const std::string& airport, std::int64_t bucket) const;
};

}  // namespace trajpred
