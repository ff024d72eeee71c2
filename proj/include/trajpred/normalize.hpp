#pragma once

#include <string>
#include <vector>

namespace trajpred {

// Per-dimension statistics fitted on a row set: mean/std for z-scoring model
// inputs and actions, min/max for scaling series before DTW. Non-finite
// dimensions are always rejected at fit time; constant dimensions are
// rejected unless allow_constant, which records them with std 1 so z-scoring
// becomes a plain mean shift.
struct NormStats {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> std_dev;  // population std
  std::vector<double> min_v;
  std::vector<double> max_v;

  static NormStats fit(const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& names, bool allow_constant = false);

  std::size_t dim() const { return mean.size(); }

  void zscore_inplace(double* x) const;
  std::vector<double> zscore(const std::vector<double>& x) const;
  std::vector<double> un_zscore(const std::vector<double>& z) const;

  void minmax_inplace(double* x) const;
  std::vector<double> minmax(const std::vector<double>& x) const;
};

}  // namespace trajpred
