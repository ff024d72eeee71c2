#include "trajpred/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "trajpred/json_io.hpp"

namespace trajpred {

using nlohmann::json;

namespace {

double gini(const std::vector<double>& counts, double total) {
  double g = 1.0;
  for (double c : counts) {
    const double p = c / total;
    g -= p * p;
  }
  return g;
}

struct TreeBuilder {
  const std::vector<FeatureVector>& x;
  const std::vector<std::size_t>& y;
  std::size_t n_classes;
  const ForestParams& params;
  int n_candidates;
  Rng rng;
  DecisionTree tree;

  std::size_t build(std::vector<std::size_t> rows, int depth) {
    std::vector<double> counts(n_classes, 0.0);
    for (std::size_t r : rows) counts[y[r]] += 1.0;
    const double total = static_cast<double>(rows.size());

    bool pure = false;
    for (double c : counts) {
      if (c == total) pure = true;
    }

    int best_feature = -1;
    double best_threshold = 0.0, best_score = std::numeric_limits<double>::infinity();
    if (!pure && depth < params.max_depth &&
        rows.size() >= static_cast<std::size_t>(params.min_split)) {
      // distinct candidate features via partial Fisher-Yates
      std::vector<std::size_t> feats(x[0].size());
      std::iota(feats.begin(), feats.end(), 0);
      for (int c = 0; c < n_candidates; ++c) {
        const std::size_t pick = c + rng.index(feats.size() - c);
        std::swap(feats[c], feats[pick]);
        const std::size_t f = feats[c];

        // sweep thresholds at midpoints between consecutive distinct values
        std::vector<std::size_t> order = rows;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return x[a][f] < x[b][f];
        });
        std::vector<double> left_counts(n_classes, 0.0);
        std::vector<double> right_counts = counts;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
          left_counts[y[order[i]]] += 1.0;
          right_counts[y[order[i]]] -= 1.0;
          const double lo = x[order[i]][f], hi = x[order[i + 1]][f];
          if (lo == hi) continue;
          const std::size_t nl = i + 1, nr = order.size() - nl;
          if (nl < static_cast<std::size_t>(params.min_leaf) ||
              nr < static_cast<std::size_t>(params.min_leaf)) {
            continue;
          }
          const double score = (static_cast<double>(nl) * gini(left_counts, nl) +
                                static_cast<double>(nr) * gini(right_counts, nr)) /
                               total;
          if (score < best_score) {
            best_score = score;
            best_feature = static_cast<int>(f);
            best_threshold = lo + (hi - lo) / 2.0;
          }
        }
      }
    }

    const std::size_t id = tree.nodes.size();
    tree.nodes.emplace_back();
    if (best_feature < 0) {
      TreeNode& leaf = tree.nodes[id];
      leaf.counts.resize(n_classes);
      for (std::size_t c = 0; c < n_classes; ++c) leaf.counts[c] = static_cast<int>(counts[c]);
      return id;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (x[r][best_feature] <= best_threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const std::size_t left = build(std::move(left_rows), depth + 1);
    tree.nodes[id].left = static_cast<int>(left);
    const std::size_t right = build(std::move(right_rows), depth + 1);
    tree.nodes[id].right = static_cast<int>(right);
    return id;
  }
};

std::size_t leaf_class(const TreeNode& leaf) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < leaf.counts.size(); ++c) {
    if (leaf.counts[c] > leaf.counts[best]) best = c;
  }
  return best;
}

std::size_t tree_predict(const DecisionTree& t, const FeatureVector& x) {
  std::size_t node = 0;
  while (t.nodes[node].feature >= 0) {
    const TreeNode& n = t.nodes[node];
    node = x[n.feature] <= n.threshold ? static_cast<std::size_t>(n.left)
                                       : static_cast<std::size_t>(n.right);
  }
  return leaf_class(t.nodes[node]);
}

ForestModel train_impl(const std::vector<FeatureVector>& x_in, const std::vector<std::size_t>& y_in,
                       const std::vector<std::string>& feature_names, const ForestParams& params,
                       std::uint64_t seed, bool parallel) {
  if (x_in.size() != y_in.size()) throw std::runtime_error("train_forest: row/label count mismatch");
  if (x_in.size() < 2) throw std::runtime_error("train_forest: needs at least 2 rows");
  if (feature_names.empty()) throw std::runtime_error("train_forest: no features");
  for (const FeatureVector& row : x_in) {
    if (row.size() != feature_names.size()) {
      throw std::runtime_error("train_forest: row arity does not match feature names");
    }
  }
  if (params.n_trees < 1 || params.max_depth < 0 || params.min_split < 2 || params.min_leaf < 1) {
    throw std::runtime_error("train_forest: invalid hyperparameters");
  }

  std::size_t n_classes = 0;
  for (std::size_t l : y_in) n_classes = std::max(n_classes, l + 1);
  {
    std::vector<bool> seen(n_classes, false);
    for (std::size_t l : y_in) seen[l] = true;
    std::size_t present = 0;
    for (bool s : seen) present += s;
    if (present < 2) throw std::runtime_error("train_forest: needs at least 2 classes");
  }

  // Canonical row order: training is invariant to input permutation.
  std::vector<std::size_t> perm(x_in.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (x_in[a] != x_in[b]) return x_in[a] < x_in[b];
    return y_in[a] < y_in[b];
  });
  std::vector<FeatureVector> x(x_in.size());
  std::vector<std::size_t> y(y_in.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    x[i] = x_in[perm[i]];
    y[i] = y_in[perm[i]];
  }

  ForestModel m;
  m.feature_names = feature_names;
  m.n_classes = n_classes;
  m.params = params;
  m.params.n_candidates =
      params.n_candidates > 0
          ? params.n_candidates
          : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(feature_names.size()))));
  m.params.n_candidates = std::min(m.params.n_candidates, static_cast<int>(feature_names.size()));
  m.trees.resize(params.n_trees);

  const std::size_t n = x.size();
  std::vector<std::vector<char>> in_bag(params.n_trees, std::vector<char>(n, 0));
  Rng base(seed);
  const int n_trees = params.n_trees;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int t = 0; t < n_trees; ++t) {
    Rng tree_rng = base.derive(static_cast<std::uint64_t>(t));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = tree_rng.index(n);
      in_bag[t][rows[i]] = 1;
    }
    TreeBuilder builder{x, y, n_classes, m.params, m.params.n_candidates, tree_rng, {}};
    builder.build(std::move(rows), 0);
    m.trees[t] = std::move(builder.tree);
  }

  // out-of-bag vote per row over the trees that never drew it
  std::size_t counted = 0, correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> votes(n_classes, 0);
    bool any = false;
    for (int t = 0; t < params.n_trees; ++t) {
      if (in_bag[t][i]) continue;
      ++votes[tree_predict(m.trees[t], x[i])];
      any = true;
    }
    if (!any) continue;
    std::size_t win = 0;
    for (std::size_t c = 1; c < n_classes; ++c) {
      if (votes[c] > votes[win]) win = c;
    }
    ++counted;
    correct += win == y[i];
  }
  m.oob_accuracy = counted > 0 ? static_cast<double>(correct) / static_cast<double>(counted) : 0.0;
  return m;
}

}  // namespace

ForestModel train_forest(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
                         const std::vector<std::string>& feature_names, const ForestParams& params,
                         std::uint64_t seed) {
  return train_impl(x, y, feature_names, params, seed, true);
}

ForestModel train_forest_serial(const std::vector<FeatureVector>& x,
                                const std::vector<std::size_t>& y,
                                const std::vector<std::string>& feature_names,
                                const ForestParams& params, std::uint64_t seed) {
  return train_impl(x, y, feature_names, params, seed, false);
}

std::pair<std::size_t, std::vector<double>> predict_class(const ForestModel& m,
                                                          const FeatureVector& x) {
  if (x.size() != m.feature_names.size()) {
    throw std::runtime_error("predict_class: feature arity mismatch");
  }
  if (m.trees.empty()) throw std::runtime_error("predict_class: empty forest");
  std::vector<std::size_t> votes(m.n_classes, 0);
  for (const DecisionTree& t : m.trees) ++votes[tree_predict(t, x)];
  std::size_t win = 0;
  std::vector<double> fractions(m.n_classes);
  for (std::size_t c = 0; c < m.n_classes; ++c) {
    fractions[c] = static_cast<double>(votes[c]) / static_cast<double>(m.trees.size());
    if (votes[c] > votes[win]) win = c;
  }
  return {win, fractions};
}

void save_forest(const std::string& path, const ForestModel& m) {
  json j;
  j["format"] = "forest-v1";
  j["feature_names"] = m.feature_names;
  j["n_classes"] = m.n_classes;
  j["oob_accuracy"] = m.oob_accuracy;
  j["params"] = {{"n_trees", m.params.n_trees},
                 {"max_depth", m.params.max_depth},
                 {"min_split", m.params.min_split},
                 {"min_leaf", m.params.min_leaf},
                 {"n_candidates", m.params.n_candidates}};
  json trees = json::array();
  for (const DecisionTree& t : m.trees) {
    json node_feature = json::array(), node_threshold = json::array(), node_left = json::array(),
         node_right = json::array(), node_counts = json::array();
    for (const TreeNode& n : t.nodes) {
      node_feature.push_back(n.feature);
      node_threshold.push_back(n.threshold);
      node_left.push_back(n.left);
      node_right.push_back(n.right);
      node_counts.push_back(n.counts);
    }
    trees.push_back({{"feature", node_feature},
                     {"threshold", node_threshold},
                     {"left", node_left},
                     {"right", node_right},
                     {"counts", node_counts}});
  }
  j["trees"] = trees;
  write_json(path, j);
}

ForestModel load_forest(const std::string& path) {
  const json j = read_json(path, "forest-v1");
  ForestModel m;
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.oob_accuracy = j.at("oob_accuracy").get<double>();
  const json& p = j.at("params");
  m.params.n_trees = p.at("n_trees").get<int>();
  m.params.max_depth = p.at("max_depth").get<int>();
  m.params.min_split = p.at("min_split").get<int>();
  m.params.min_leaf = p.at("min_leaf").get<int>();
  m.params.n_candidates = p.at("n_candidates").get<int>();
  for (const json& jt : j.at("trees")) {
    DecisionTree t;
    const auto feature = jt.at("feature").get<std::vector<int>>();
    const auto threshold = jt.at("threshold").get<std::vector<double>>();
    const auto left = jt.at("left").get<std::vector<int>>();
    const auto right = jt.at("right").get<std::vector<int>>();
    const auto counts = jt.at("counts").get<std::vector<std::vector<int>>>();
    const std::size_t n = feature.size();
    if (threshold.size() != n || left.size() != n || right.size() != n || counts.size() != n) {
      throw std::runtime_error(path + ": malformed tree arrays");
    }
    for (std::size_t i = 0; i < n; ++i) {
      TreeNode node;
      node.feature = feature[i];
      node.threshold = threshold[i];
      node.left = left[i];
      node.right = right[i];
      node.counts = counts[i];
      if (node.feature >= 0) {
        if (node.feature >= static_cast<int>(m.feature_names.size()) || node.left < 0 ||
            node.right < 0 || node.left >= static_cast<int>(n) ||
            node.right >= static_cast<int>(n)) {
          throw std::runtime_error(path + ": malformed internal node");
        }
      } else if (node.counts.size() != m.n_classes) {
        throw std::runtime_error(path + ": leaf counts arity mismatch");
      }
      t.nodes.push_back(std::move(node));
    }
    m.trees.push_back(std::move(t));
  }
  if (m.trees.empty()) throw std::runtime_error(path + ": empty forest");
  return m;
}

}  // namespace trajpred
