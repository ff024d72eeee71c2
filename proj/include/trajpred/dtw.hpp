#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "trajpred/geo.hpp"

namespace trajpred {

// Dimension selectors for trajectory comparison: 0, 1, 2 pick lon, lat, alt;
// 3 + k picks state feature k.
std::vector<std::size_t> position_dims();
std::vector<std::size_t> position_feature_dims(std::size_t n_features);

// One point per state, restricted to the selected dimensions.
// Throws if a selected feature is missing from any state.
std::vector<FeatureVector> extract_dims(const Trajectory& t,
                                        const std::vector<std::size_t>& dims);

// Min-max scales each dimension over the pooled points of both sequences.
// A dimension that is constant across the pool maps to 0 everywhere, so it
// contributes nothing to point distances.
void minmax_scale_pair(std::vector<FeatureVector>& a, std::vector<FeatureVector>& b);

struct DtwResult {
  double cost = 0.0;
  // Monotone warp from (0,0) to (|a|-1, |b|-1); steps advance i, j, or both.
  std::vector<std::pair<std::size_t, std::size_t>> path;
};

// Dynamic-time-warping alignment over point sequences with Euclidean point
// distance. Backtracking prefers the diagonal, then the i-predecessor, so the
// path is deterministic under cost ties.
DtwResult dtw_points(const std::vector<FeatureVector>& a,
                     const std::vector<FeatureVector>& b);

// Cost only, O(min(|a|,|b|)) memory. Bitwise equal to dtw_points().cost.
double dtw_cost_points(const std::vector<FeatureVector>& a,
                       const std::vector<FeatureVector>& b);

// DTW between trajectories after pooled min-max scaling of the selected dims.
DtwResult dtw(const Trajectory& a, const Trajectory& b, const std::vector<std::size_t>& dims);

// dtw cost divided by sqrt(d * max(|a|, |b|)): a length- and dimension-
// compensated dissimilarity. Zero for identical trajectories, symmetric.
double ndtw(const Trajectory& a, const Trajectory& b, const std::vector<std::size_t>& dims);

struct DistanceMatrix {
  std::vector<std::string> ids;  // row order
  std::size_t n = 0;
  std::vector<double> d;  // n*n, symmetric, zero diagonal

  double at(std::size_t i, std::size_t j) const { return d[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return d[i * n + j]; }
};

// Pairwise ndtw over the corpus. The OpenMP variant splits work across the
// pair list; every entry is computed independently, so it is bitwise equal to
// the serial fill.
DistanceMatrix distance_matrix(const std::vector<Trajectory>& trajs,
                               const std::vector<std::size_t>& dims);
DistanceMatrix distance_matrix_serial(const std::vector<Trajectory>& trajs,
                                      const std::vector<std::size_t>& dims);

}  // namespace trajpred
