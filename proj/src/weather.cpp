#include "trajpred/weather.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trajpred {

namespace {

// Nearest integer with exact midpoints going down: ceil(v - 0.5).
long long nearest_low(double v) {
  return static_cast<long long>(std::ceil(v - 0.5));
}

long long nearest_low_int(std::int64_t x, std::int64_t origin, std::int64_t cell) {
  // (x - origin)/cell rounded to nearest, midpoint down, in exact integer math:
  // floor((2*(x - origin) + cell) / (2*cell)) works for cell > 0, and the
  // midpoint 2*(x-origin) == (2k+1)*cell lands exactly on k via floor of k+1/2.
  const std::int64_t num = 2 * (x - origin) + cell;
  const std::int64_t den = 2 * cell;
  std::int64_t q = num / den;
  std::int64_t r = num % den;
  if (r < 0) --q;
  // exact midpoint: num divisible by den means (x-origin)/cell = q - 1/2
  if (r == 0) --q;
  return q;
}

}  // namespace

std::size_t WeatherGrid::flat_index(int i, int j, int k, int l) const {
  const std::size_t f = static_cast<std::size_t>(feature_count());
  return (((static_cast<std::size_t>(i) * n_lat + j) * n_alt + k) * n_t + l) * f;
}

double* WeatherGrid::cell(int i, int j, int k, int l) { return values.data() + flat_index(i, j, k, l); }
const double* WeatherGrid::cell(int i, int j, int k, int l) const {
  return values.data() + flat_index(i, j, k, l);
}

namespace {

struct GridIdx {
  long long i, j, k, l;
};

GridIdx raw_indices(const WeatherGrid& g, const GeoPosition& p, std::int64_t t) {
  GridIdx r;
  r.i = nearest_low((p.lon - g.origin_lon) / g.cell_lon);
  r.j = nearest_low((p.lat - g.origin_lat) / g.cell_lat);
  r.k = nearest_low((p.alt - g.origin_alt) / g.cell_alt);
  r.l = nearest_low_int(t, g.origin_t, g.cell_t);
  return r;
}

}  // namespace

FeatureVector WeatherGrid::at(const GeoPosition& p, std::int64_t t) const {
  const GridIdx r = raw_indices(*this, p, t);
  if (r.i < 0 || r.i >= n_lon || r.j < 0 || r.j >= n_lat || r.k < 0 || r.k >= n_alt || r.l < 0 ||
      r.l >= n_t) {
    throw std::runtime_error(
        "weather grid miss at lon=" + std::to_string(p.lon) + " lat=" + std::to_string(p.lat) +
        " alt=" + std::to_string(p.alt) + " t=" + std::to_string(t) + " (cell " +
        std::to_string(r.i) + "," + std::to_string(r.j) + "," + std::to_string(r.k) + "," +
        std::to_string(r.l) + ")");
  }
  const double* c = cell(static_cast<int>(r.i), static_cast<int>(r.j), static_cast<int>(r.k),
                         static_cast<int>(r.l));
  return FeatureVector(c, c + feature_count());
}

FeatureVector WeatherGrid::at_clamped(const GeoPosition& p, std::int64_t t) const {
  GridIdx r = raw_indices(*this, p, t);
  r.i = std::clamp<long long>(r.i, 0, n_lon - 1);
  r.j = std::clamp<long long>(r.j, 0, n_lat - 1);
  r.k = std::clamp<long long>(r.k, 0, n_alt - 1);
  r.l = std::clamp<long long>(r.l, 0, n_t - 1);
  const double* c = cell(static_cast<int>(r.i), static_cast<int>(r.j), static_cast<int>(r.k),
                         static_cast<int>(r.l));
  return FeatureVector(c, c + feature_count());
}

bool WeatherGrid::covers(const GeoPosition& p, std::int64_t t) const {
  const GridIdx r = raw_indices(*this, p, t);
  return r.i >= 0 && r.i < n_lon && r.j >= 0 && r.j < n_lat && r.k >= 0 && r.k < n_alt && r.l >= 0 &&
         r.l < n_t;
}

std::int64_t ArrivalConditionsTable::bucket_of(std::int64_t t) const {
  std::int64_t q = t / bucket_seconds;
  if (t % bucket_seconds != 0 && ((t < 0) != (bucket_seconds < 0))) --q;
  return q;
}

bool ArrivalConditionsTable::has(const std::string& airport, std::int64_t t) const {
  return rows.count({airport, bucket_of(t)}) != 0;
}

const FeatureVector& ArrivalConditionsTable::at_time(const std::string& airport, std::int64_t t) const {
  return at_bucket(airport, bucket_of(t));
}

const FeatureVector& ArrivalConditionsTable::at_bucket(const std::string& airport,
                                                       std::int64_t bucket) const {
  auto it = rows.find({airport, bucket});
  if (it == rows.end()) {
    throw std::runtime_error("no arrival conditions for airport '" + airport + "' bucket " +
                             std::to_string(bucket));
  }
  return it->second;
}

}  // namespace trajpred
