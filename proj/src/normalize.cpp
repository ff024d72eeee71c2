#include "trajpred/normalize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace trajpred {

NormStats NormStats::fit(const std::vector<std::vector<double>>& rows,
                         const std::vector<std::string>& names, bool allow_constant) {
  if (rows.empty()) throw std::runtime_error("NormStats::fit: no rows");
  const std::size_t d = names.size();
  for (const auto& r : rows) {
    if (r.size() != d) throw std::runtime_error("NormStats::fit: row arity mismatch");
  }
  NormStats s;
  s.names = names;
  s.mean.assign(d, 0.0);
  s.std_dev.assign(d, 0.0);
  s.min_v.assign(d, std::numeric_limits<double>::infinity());
  s.max_v.assign(d, -std::numeric_limits<double>::infinity());

  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(r[k])) {
        throw std::runtime_error("NormStats::fit: non-finite value in dimension '" + names[k] + "'");
      }
      s.mean[k] += r[k];
      if (r[k] < s.min_v[k]) s.min_v[k] = r[k];
      if (r[k] > s.max_v[k]) s.max_v[k] = r[k];
    }
  }
  for (std::size_t k = 0; k < d; ++k) s.mean[k] /= n;
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < d; ++k) {
      const double dv = r[k] - s.mean[k];
      s.std_dev[k] += dv * dv;
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    s.std_dev[k] = std::sqrt(s.std_dev[k] / n);
    if (s.std_dev[k] <= 0.0 || s.max_v[k] <= s.min_v[k]) {
      if (!allow_constant) {
        throw std::runtime_error("NormStats::fit: dimension '" + names[k] + "' is constant");
      }
      s.std_dev[k] = 1.0;
    }
  }
  return s;
}

void NormStats::zscore_inplace(double* x) const {
  for (std::size_t k = 0; k < dim(); ++k) x[k] = (x[k] - mean[k]) / std_dev[k];
}

std::vector<double> NormStats::zscore(const std::vector<double>& x) const {
  if (x.size() != dim()) throw std::runtime_error("zscore: arity mismatch");
  std::vector<double> z(x);
  zscore_inplace(z.data());
  return z;
}

std::vector<double> NormStats::un_zscore(const std::vector<double>& z) const {
  if (z.size() != dim()) throw std::runtime_error("un_zscore: arity mismatch");
  std::vector<double> x(z.size());
  for (std::size_t k = 0; k < dim(); ++k) x[k] = z[k] * std_dev[k] + mean[k];
  return x;
}

void NormStats::minmax_inplace(double* x) const {
  for (std::size_t k = 0; k < dim(); ++k) x[k] = (x[k] - min_v[k]) / (max_v[k] - min_v[k]);
}

std::vector<double> NormStats::minmax(const std::vector<double>& x) const {
  if (x.size() != dim()) throw std::runtime_error("minmax: arity mismatch");
  std::vector<double> z(x);
  minmax_inplace(z.data());
  return z;
}

}  // namespace trajpred
