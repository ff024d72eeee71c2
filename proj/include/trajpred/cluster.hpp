#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "trajpred/dtw.hpp"

namespace trajpred {

struct MergeStep {
  // Clusters are named by their smallest member row index; a < b.
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;  // inter-cluster distance at merge time
  std::size_t size = 0;  // member count of the combined cluster
};

struct ClusterModel {
  std::size_t k = 0;
  std::vector<std::string> ids;       // row order of the distance matrix
  std::vector<std::size_t> labels;    // parallel to ids, values in [0, k)
  std::vector<MergeStep> merges;      // full agglomeration sequence, n-1 steps
  // (candidate k, silhouette) pairs; filled by select_k.
  std::vector<std::pair<std::size_t, double>> silhouette_by_k;
};

// Bottom-up agglomeration with the Ward criterion, run via the Lance-Williams
// recurrence on squared distances. The merged pair minimizes distance, with
// ties broken by the smallest (a, b) representative pair. Labels are the cut
// at k clusters, numbered by ascending smallest member index.
ClusterModel agglomerate(const DistanceMatrix& dist, std::size_t k);

// Mean over points of (b - a) / max(a, b); a point alone in its cluster
// contributes 0. Requires at least two clusters, all non-empty.
double silhouette(const DistanceMatrix& dist, const std::vector<std::size_t>& labels);

// Agglomerates at every k in [k_min, k_max] and returns the model with the
// highest silhouette; ties go to the smallest k. The scanned scores are kept
// in silhouette_by_k.
ClusterModel select_k(const DistanceMatrix& dist, std::size_t k_min, std::size_t k_max);

// Chance-corrected partition agreement in [-1, 1]; 1 means identical up to
// relabeling. Both trivial partitions (numerator and denominator zero) count
// as perfect agreement.
double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

void save_cluster_model(const std::string& path, const ClusterModel& m);
ClusterModel load_cluster_model(const std::string& path);

}  // namespace trajpred
