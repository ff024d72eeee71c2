#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "trajpred/geo.hpp"
#include "trajpred/rng.hpp"

namespace trajpred {

struct ForestParams {
  int n_trees = 20;
  int max_depth = 20;  // root at depth 0; nodes at max_depth never split
  int min_split = 2;   // fewest rows a node may split
  int min_leaf = 1;    // fewest rows a child may receive
  // Candidate features tried per split; 0 means floor(sqrt(#features)).
  int n_candidates = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<int> counts;  // training class counts, leaves only
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<std::string> feature_names;
  std::size_t n_classes = 0;
  ForestParams params;
  double oob_accuracy = 0.0;  // out-of-bag estimate from the training call
};

// Bootstrap-aggregated Gini trees. Rows are first sorted canonically
// (features lexicographically, then label), so permuting the input changes
// nothing; each tree draws its bootstrap and split candidates from an rng
// stream derived from the tree index. The OpenMP variant trains trees in
// parallel and is bitwise identical to the serial one.
ForestModel train_forest(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
                         const std::vector<std::string>& feature_names, const ForestParams& params,
                         std::uint64_t seed);
ForestModel train_forest_serial(const std::vector<FeatureVector>& x,
                                const std::vector<std::size_t>& y,
                                const std::vector<std::string>& feature_names,
                                const ForestParams& params, std::uint64_t seed);

// Majority vote over trees; ties go to the lowest class id. The fractions
// are votes / n_trees and sum to 1.
std::pair<std::size_t, std::vector<double>> predict_class(const ForestModel& m,
                                                          const FeatureVector& x);

void save_forest(const std::string& path, const ForestModel& m);
ForestModel load_forest(const std::string& path);

}  // namespace trajpred
