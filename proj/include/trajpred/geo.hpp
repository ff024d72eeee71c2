#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trajpred {

inline constexpr double kEarthRadiusM = 6371000.0;  // spherical model
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;

struct GeoPosition {
  double lon = 0.0;  // degrees, [-180, 180]
  double lat = 0.0;  // degrees, [-90, 90]
  double alt = 0.0;  // meters AMSL
};

bool position_valid(const GeoPosition& p);

struct RawState {
  GeoPosition position;
  std::int64_t timestamp = 0;  // epoch seconds
};

using FeatureVector = std::vector<double>;

struct EnrichedState {
  GeoPosition position;
  std::int64_t timestamp = 0;
  FeatureVector features;  // en-route weather, fixed arity per dataset
};

struct Trajectory {
  std::string id;
  std::vector<EnrichedState> states;  // timestamps strictly increasing
  GeoPosition origin;
  GeoPosition destination;
  FeatureVector arrival_features;  // conditions at arrival; empty until attached
};

// Position displacement over one time step, in position units.
struct DeltaAction {
  double dlon = 0.0;  // degrees
  double dlat = 0.0;  // degrees
  double dalt = 0.0;  // meters
};

// Local tangent-plane offset, meters.
struct EnuVector {
  double east = 0.0;
  double north = 0.0;
  double up = 0.0;
};

// Deterministic transition: componentwise addition, no renormalization.
GeoPosition apply_action(const GeoPosition& p, const DeltaAction& a);

// Flight duration implied by a trajectory length at fixed step dt.
std::int64_t eta_seconds(std::int64_t traj_len, std::int64_t dt);

// Equirectangular projection onto the local tangent plane at ref.
EnuVector to_enu(const GeoPosition& ref, const GeoPosition& p);

// Euclidean distance between a and b in the ENU frame anchored at ref.
double distance_3d(const GeoPosition& ref, const GeoPosition& a, const GeoPosition& b);

// Same, east/north components only.
double distance_horizontal(const GeoPosition& ref, const GeoPosition& a, const GeoPosition& b);

struct BoundingBox {
  double lon_min = 0.0, lon_max = 0.0;
  double lat_min = 0.0, lat_max = 0.0;

  // Corners may be given in any order.
  static BoundingBox from_corners(double lon_a, double lat_a, double lon_b, double lat_b);
  bool contains(const GeoPosition& p) const;
};

}  // namespace trajpred
