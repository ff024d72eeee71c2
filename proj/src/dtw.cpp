#include "trajpred/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace trajpred {

std::vector<std::size_t> position_dims() { return {0, 1, 2}; }

std::vector<std::size_t> position_feature_dims(std::size_t n_features) {
  std::vector<std::size_t> dims = {0, 1, 2};
  for (std::size_t k = 0; k < n_features; ++k) dims.push_back(3 + k);
  return dims;
}

std::vector<FeatureVector> extract_dims(const Trajectory& t,
                                        const std::vector<std::size_t>& dims) {
  if (t.states.empty()) throw std::runtime_error("extract_dims: trajectory '" + t.id + "' is empty");
  if (dims.empty()) throw std::runtime_error("extract_dims: no dimensions selected");
  std::vector<FeatureVector> out(t.states.size());
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    const EnrichedState& s = t.states[i];
    FeatureVector& p = out[i];
    p.reserve(dims.size());
    for (std::size_t dim : dims) {
      switch (dim) {
        case 0: p.push_back(s.position.lon); break;
        case 1: p.push_back(s.position.lat); break;
        case 2: p.push_back(s.position.alt); break;
        default: {
          const std::size_t f = dim - 3;
          if (f >= s.features.size()) {
            throw std::runtime_error("extract_dims: trajectory '" + t.id + "' state " +
                                     std::to_string(i) + " lacks feature " + std::to_string(f));
          }
          p.push_back(s.features[f]);
        }
      }
    }
  }
  return out;
}

void minmax_scale_pair(std::vector<FeatureVector>& a, std::vector<FeatureVector>& b) {
  if (a.empty() || b.empty()) throw std::runtime_error("minmax_scale_pair: empty sequence");
  const std::size_t d = a[0].size();
  if (b[0].size() != d) throw std::runtime_error("minmax_scale_pair: dimension mismatch");
  for (std::size_t k = 0; k < d; ++k) {
    double lo = a[0][k], hi = a[0][k];
    for (const FeatureVector& p : a) {
      lo = std::min(lo, p[k]);
      hi = std::max(hi, p[k]);
    }
    for (const FeatureVector& p : b) {
      lo = std::min(lo, p[k]);
      hi = std::max(hi, p[k]);
    }
    const double range = hi - lo;
    for (FeatureVector& p : a) p[k] = range > 0.0 ? (p[k] - lo) / range : 0.0;
    for (FeatureVector& p : b) p[k] = range > 0.0 ? (p[k] - lo) / range : 0.0;
  }
}

namespace {

double point_dist(const FeatureVector& p, const FeatureVector& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double diff = p[k] - q[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

void check_points(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
  if (a.empty() || b.empty()) throw std::runtime_error("dtw: empty sequence");
  if (a[0].size() != b[0].size()) throw std::runtime_error("dtw: dimension mismatch");
}

}  // namespace

DtwResult dtw_points(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
  check_points(a, b);
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> acc(na * nb);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      double prev;
      if (i == 0 && j == 0) {
        prev = 0.0;
      } else if (i == 0) {
        prev = acc[j - 1];
      } else if (j == 0) {
        prev = acc[(i - 1) * nb];
      } else {
        prev = std::min({acc[(i - 1) * nb + (j - 1)], acc[(i - 1) * nb + j],
                         acc[i * nb + (j - 1)]});
      }
      acc[i * nb + j] = prev + point_dist(a[i], b[j]);
    }
  }

  DtwResult r;
  r.cost = acc[na * nb - 1];
  // Backtrack, preferring diagonal, then the i-predecessor, under ties.
  std::size_t i = na - 1, j = nb - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc[(i - 1) * nb + (j - 1)];
      const double up = acc[(i - 1) * nb + j];
      const double left = acc[i * nb + (j - 1)];
      const double best = std::min({diag, up, left});
      if (diag == best) {
        --i;
        --j;
      } else if (up == best) {
        --i;
      } else {
        --j;
      }
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());
  return r;
}

double dtw_cost_points(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
  check_points(a, b);
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> row(nb), prev_row(nb);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      double prev;
      if (i == 0 && j == 0) {
        prev = 0.0;
      } else if (i == 0) {
        prev = row[j - 1];
      } else if (j == 0) {
        prev = prev_row[0];
      } else {
        prev = std::min({prev_row[j - 1], prev_row[j], row[j - 1]});
      }
      row[j] = prev + point_dist(a[i], b[j]);
    }
    std::swap(row, prev_row);
  }
  return prev_row[nb - 1];
}

namespace {

// Shared by ndtw and the matrix fill so both produce bitwise equal values.
double scaled_pair_cost(std::vector<FeatureVector> pa, std::vector<FeatureVector> pb,
                        std::size_t d) {
  minmax_scale_pair(pa, pb);
  const double norm = std::sqrt(static_cast<double>(d) *
                                static_cast<double>(std::max(pa.size(), pb.size())));
  return dtw_cost_points(pa, pb) / norm;
}

}  // namespace

DtwResult dtw(const Trajectory& a, const Trajectory& b, const std::vector<std::size_t>& dims) {
  std::vector<FeatureVector> pa = extract_dims(a, dims);
  std::vector<FeatureVector> pb = extract_dims(b, dims);
  minmax_scale_pair(pa, pb);
  return dtw_points(pa, pb);
}

double ndtw(const Trajectory& a, const Trajectory& b, const std::vector<std::size_t>& dims) {
  return scaled_pair_cost(extract_dims(a, dims), extract_dims(b, dims), dims.size());
}

namespace {

DistanceMatrix fill_matrix(const std::vector<Trajectory>& trajs,
                           const std::vector<std::size_t>& dims, bool parallel) {
  DistanceMatrix m;
  m.n = trajs.size();
  m.d.assign(m.n * m.n, 0.0);
  m.ids.reserve(m.n);
  for (const Trajectory& t : trajs) m.ids.push_back(t.id);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = i + 1; j < m.n; ++j) {
      if (m.ids[i] == m.ids[j]) {
        throw std::runtime_error("distance_matrix: duplicate trajectory id '" + m.ids[i] + "'");
      }
    }
  }

  std::vector<std::vector<FeatureVector>> raw(m.n);
  for (std::size_t i = 0; i < m.n; ++i) raw[i] = extract_dims(trajs[i], dims);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(m.n * (m.n - 1) / 2);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = i + 1; j < m.n; ++j) pairs.emplace_back(i, j);

  // Entries are independent, so the schedule cannot affect the values.
  const std::int64_t np = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
  for (std::int64_t p = 0; p < np; ++p) {
    const auto [i, j] = pairs[static_cast<std::size_t>(p)];
    const double v = scaled_pair_cost(raw[i], raw[j], dims.size());
    m.at(i, j) = v;
    m.at(j, i) = v;
  }
  return m;
}

}  // namespace

DistanceMatrix distance_matrix(const std::vector<Trajectory>& trajs,
                               const std::vector<std::size_t>& dims) {
  return fill_matrix(trajs, dims, true);
}

DistanceMatrix distance_matrix_serial(const std::vector<Trajectory>& trajs,
                                      const std::vector<std::size_t>& dims) {
  return fill_matrix(trajs, dims, false);
}

}  // namespace trajpred
