#include "trajpred/geo.hpp"

#include <algorithm>
#include <cmath>

namespace trajpred {

bool position_valid(const GeoPosition& p) {
  return std::isfinite(p.lon) && p.lon >= -180.0 && p.lon <= 180.0 &&
         std::isfinite(p.lat) && p.lat >= -90.0 && p.lat <= 90.0 &&
         std::isfinite(p.alt) && p.alt >= -500.0 && p.alt <= 25000.0;
}

GeoPosition apply_action(const GeoPosition& p, const DeltaAction& a) {
  return GeoPosition{p.lon + a.dlon, p.lat + a.dlat, p.alt + a.dalt};
}

std::int64_t eta_seconds(std::int64_t traj_len, std::int64_t dt) {
  return traj_len * dt;
}

EnuVector to_enu(const GeoPosition& ref, const GeoPosition& p) {
  const double scale = kEarthRadiusM * kDegToRad;
  EnuVector e;
  e.east = (p.lon - ref.lon) * std::cos(ref.lat * kDegToRad) * scale;
  e.north = (p.lat - ref.lat) * scale;
  e.up = p.alt - ref.alt;
  return e;
}

double distance_3d(const GeoPosition& ref, const GeoPosition& a, const GeoPosition& b) {
  const EnuVector ea = to_enu(ref, a);
  const EnuVector eb = to_enu(ref, b);
  const double de = ea.east - eb.east;
  const double dn = ea.north - eb.north;
  const double du = ea.up - eb.up;
  return std::sqrt(de * de + dn * dn + du * du);
}

double distance_horizontal(const GeoPosition& ref, const GeoPosition& a, const GeoPosition& b) {
  const EnuVector ea = to_enu(ref, a);
  const EnuVector eb = to_enu(ref, b);
  const double de = ea.east - eb.east;
  const double dn = ea.north - eb.north;
  return std::sqrt(de * de + dn * dn);
}

BoundingBox BoundingBox::from_corners(double lon_a, double lat_a, double lon_b, double lat_b) {
  BoundingBox b;
  b.lon_min = std::min(lon_a, lon_b);
  b.lon_max = std::max(lon_a, lon_b);
  b.lat_min = std::min(lat_a, lat_b);
  b.lat_max = std::max(lat_a, lat_b);
  return b;
}

bool BoundingBox::contains(const GeoPosition& p) const {
  return p.lon >= lon_min && p.lon <= lon_max && p.lat >= lat_min && p.lat <= lat_max;
}

}  // namespace trajpred
