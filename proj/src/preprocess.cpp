#include "trajpred/preprocess.hpp"

#include <cmath>
#include <stdexcept>

namespace trajpred {

std::string to_string(RejectReason r) {
  switch (r) {
    case RejectReason::incomplete_start: return "incomplete_start";
    case RejectReason::incomplete_end: return "incomplete_end";
    case RejectReason::speed_violation: return "speed_violation";
  }
  return "unknown";
}

Trajectory resample(const Trajectory& traj, std::int64_t dt) {
  if (dt <= 0) throw std::runtime_error("resample: dt must be positive");
  if (traj.states.size() < 2) {
    throw std::runtime_error("resample: trajectory '" + traj.id + "' has fewer than 2 states");
  }
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    if (traj.states[i + 1].timestamp <= traj.states[i].timestamp) {
      throw std::runtime_error("resample: trajectory '" + traj.id +
                               "' has non-increasing timestamps at index " + std::to_string(i + 1));
    }
  }

  Trajectory out;
  out.id = traj.id;
  out.origin = traj.origin;
  out.destination = traj.destination;
  out.arrival_features = traj.arrival_features;

  const std::int64_t t0 = traj.states.front().timestamp;
  const std::int64_t t_end = traj.states.back().timestamp;
  const std::size_t k = traj.states.front().features.size();

  std::size_t seg = 0;  // invariant: states[seg].timestamp <= tick < states[seg+1].timestamp
  for (std::int64_t tick = t0; tick <= t_end; tick += dt) {
    while (seg + 2 < traj.states.size() && traj.states[seg + 1].timestamp <= tick) ++seg;
    const EnrichedState& a = traj.states[seg];
    const EnrichedState& b = traj.states[seg + 1];
    EnrichedState s;
    s.timestamp = tick;
    if (tick == a.timestamp) {
      s = a;
      s.timestamp = tick;
    } else if (tick == b.timestamp) {
      s = b;
      s.timestamp = tick;
    } else {
      const double u = static_cast<double>(tick - a.timestamp) /
                       static_cast<double>(b.timestamp - a.timestamp);
      s.position.lon = a.position.lon + u * (b.position.lon - a.position.lon);
      s.position.lat = a.position.lat + u * (b.position.lat - a.position.lat);
      s.position.alt = a.position.alt + u * (b.position.alt - a.position.alt);
      s.features.resize(k);
      for (std::size_t f = 0; f < k; ++f) {
        s.features[f] = a.features[f] + u * (b.features[f] - a.features[f]);
      }
    }
    out.states.push_back(std::move(s));
  }
  return out;
}

CleanResult clean(const std::vector<Trajectory>& trajs, const PreprocessParams& params) {
  CleanResult result;
  for (const auto& traj : trajs) {
    if (traj.states.empty()) {
      result.rejected.emplace_back(traj.id, RejectReason::incomplete_start);
      continue;
    }
    const GeoPosition& first = traj.states.front().position;
    const GeoPosition& last = traj.states.back().position;
    if (distance_3d(traj.origin, first, traj.origin) > params.r_near_m) {
      result.rejected.emplace_back(traj.id, RejectReason::incomplete_start);
      continue;
    }
    if (distance_3d(traj.destination, last, traj.destination) > params.r_near_m) {
      result.rejected.emplace_back(traj.id, RejectReason::incomplete_end);
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i + 1 < traj.states.size() && ok; ++i) {
      const auto& a = traj.states[i];
      const auto& b = traj.states[i + 1];
      const double dt = static_cast<double>(b.timestamp - a.timestamp);
      if (dt <= 0.0) {
        ok = false;
        break;
      }
      const double d = distance_3d(a.position, a.position, b.position);
      if (d / dt > params.v_max_ms) ok = false;
    }
    if (!ok) {
      result.rejected.emplace_back(traj.id, RejectReason::speed_violation);
      continue;
    }
    result.kept.push_back(traj);
  }
  return result;
}

void enrich(Trajectory& traj, const WeatherGrid& grid) {
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    auto& s = traj.states[i];
    try {
      s.features = grid.at(s.position, s.timestamp);
    } catch (const std::exception& e) {
      throw std::runtime_error("enrich: trajectory '" + traj.id + "' state " + std::to_string(i) +
                               ": " + e.what());
    }
  }
}

void attach_arrivals(Trajectory& traj, const ArrivalConditionsTable& table,
                     const std::string& airport) {
  if (traj.states.empty()) throw std::runtime_error("attach_arrivals: empty trajectory");
  traj.arrival_features = table.at_time(airport, traj.states.back().timestamp);
}

std::vector<std::pair<EnrichedState, DeltaAction>> derive_actions(const Trajectory& traj) {
  if (traj.states.size() < 2) {
    throw std::runtime_error("derive_actions: trajectory '" + traj.id + "' has fewer than 2 states");
  }
  std::vector<std::pair<EnrichedState, DeltaAction>> out;
  out.reserve(traj.states.size() - 1);
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    const GeoPosition& p = traj.states[i].position;
    const GeoPosition& q = traj.states[i + 1].position;
    out.emplace_back(traj.states[i], DeltaAction{q.lon - p.lon, q.lat - p.lat, q.alt - p.alt});
  }
  return out;
}

}  // namespace trajpred
