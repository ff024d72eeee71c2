#include "trajpred/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trajpred/json_io.hpp"

namespace trajpred {

using nlohmann::json;

ClusterModel agglomerate(const DistanceMatrix& dist, std::size_t k) {
  const std::size_t n = dist.n;
  if (n == 0) throw std::runtime_error("agglomerate: empty distance matrix");
  if (dist.d.size() != n * n) throw std::runtime_error("agglomerate: malformed distance matrix");
  if (k < 1 || k > n) throw std::runtime_error("agglomerate: k must be in [1, n]");

  // w holds squared inter-cluster distances between active representatives.
  std::vector<double> w(n * n);
  for (std::size_t i = 0; i < n * n; ++i) w[i] = dist.d[i] * dist.d[i];
  std::vector<bool> active(n, true);
  std::vector<double> size(n, 1.0);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  ClusterModel m;
  m.k = k;
  m.ids = dist.ids;
  m.labels.assign(n, 0);

  auto snapshot = [&] {
    std::size_t next = 0;
    for (std::size_t rep = 0; rep < n; ++rep) {
      if (!active[rep]) continue;
      for (std::size_t p : members[rep]) m.labels[p] = next;
      ++next;
    }
  };
  if (k == n) snapshot();

  for (std::size_t merge = 1; merge < n; ++merge) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (w[i * n + j] < best) {
          best = w[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }

    for (std::size_t t = 0; t < n; ++t) {
      if (!active[t] || t == bi || t == bj) continue;
      const double upd = ((size[bi] + size[t]) * w[bi * n + t] +
                          (size[bj] + size[t]) * w[bj * n + t] - size[t] * best) /
                         (size[bi] + size[bj] + size[t]);
      // Roundoff can push a mathematically non-negative value slightly below 0.
      const double v = std::max(upd, 0.0);
      w[bi * n + t] = v;
      w[t * n + bi] = v;
    }

    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    size[bi] += size[bj];
    active[bj] = false;
    m.merges.push_back(
        {bi, bj, std::sqrt(best), static_cast<std::size_t>(size[bi])});
    if (n - merge == k) snapshot();
  }
  return m;
}

double silhouette(const DistanceMatrix& dist, const std::vector<std::size_t>& labels) {
  const std::size_t n = dist.n;
  if (labels.size() != n) throw std::runtime_error("silhouette: label count mismatch");
  if (n == 0) throw std::runtime_error("silhouette: empty matrix");
  std::size_t k = 0;
  for (std::size_t l : labels) k = std::max(k, l + 1);
  if (k < 2) throw std::runtime_error("silhouette: needs at least 2 clusters");
  std::vector<std::size_t> count(k, 0);
  for (std::size_t l : labels) ++count[l];
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0) throw std::runtime_error("silhouette: empty cluster");
  }

  double total = 0.0;
  std::vector<double> sum(k);
  for (std::size_t p = 0; p < n; ++p) {
    if (count[labels[p]] == 1) continue;  // singleton contributes 0
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t q = 0; q < n; ++q) sum[labels[q]] += dist.at(p, q);
    const double a = sum[labels[p]] / static_cast<double>(count[labels[p]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == labels[p]) continue;
      b = std::min(b, sum[c] / static_cast<double>(count[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

ClusterModel select_k(const DistanceMatrix& dist, std::size_t k_min, std::size_t k_max) {
  const std::size_t n = dist.n;
  if (k_min > k_max) throw std::runtime_error("select_k: empty k range");
  if (k_min < 2 || k_max + 1 > n) {
    throw std::runtime_error("select_k: k range must lie within [2, n-1]");
  }

  ClusterModel best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::size_t, double>> table;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    ClusterModel m = agglomerate(dist, k);
    const double s = silhouette(dist, m.labels);
    table.emplace_back(k, s);
    if (s > best_score) {
      best_score = s;
      best = std::move(m);
    }
  }
  best.silhouette_by_k = std::move(table);
  return best;
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) throw std::runtime_error("adjusted_rand_index: length mismatch");
  if (a.empty()) throw std::runtime_error("adjusted_rand_index: empty labels");
  std::size_t ka = 0, kb = 0;
  for (std::size_t l : a) ka = std::max(ka, l + 1);
  for (std::size_t l : b) kb = std::max(kb, l + 1);

  std::vector<double> table(ka * kb, 0.0), ra(ka, 0.0), cb(kb, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[a[i] * kb + b[i]] += 1.0;
    ra[a[i]] += 1.0;
    cb[b[i]] += 1.0;
  }
  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_cells = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (double v : table) sum_cells += comb2(v);
  for (double v : ra) sum_a += comb2(v);
  for (double v : cb) sum_b += comb2(v);
  const double expected = sum_a * sum_b / comb2(static_cast<double>(a.size()));
  const double denom = 0.5 * (sum_a + sum_b) - expected;
  if (denom == 0.0) return 1.0;  // both partitions trivial and identical
  return (sum_cells - expected) / denom;
}

void save_cluster_model(const std::string& path, const ClusterModel& m) {
  json j;
  j["format"] = "cluster-model-v1";
  j["k"] = m.k;
  j["ids"] = m.ids;
  json labels = json::object();
  for (std::size_t i = 0; i < m.ids.size(); ++i) labels[m.ids[i]] = m.labels[i];
  j["labels"] = labels;
  json merges = json::array();
  for (const MergeStep& s : m.merges) merges.push_back({s.a, s.b, s.height, s.size});
  j["merges"] = merges;
  json sil = json::array();
  for (const auto& [k, score] : m.silhouette_by_k) sil.push_back({k, score});
  j["silhouette_by_k"] = sil;
  write_json(path, j);
}

ClusterModel load_cluster_model(const std::string& path) {
  const json j = read_json(path, "cluster-model-v1");
  ClusterModel m;
  m.k = j.at("k").get<std::size_t>();
  m.ids = j.at("ids").get<std::vector<std::string>>();
  const json& labels = j.at("labels");
  m.labels.reserve(m.ids.size());
  for (const std::string& id : m.ids) {
    if (!labels.contains(id)) {
      throw std::runtime_error(path + ": missing label for trajectory '" + id + "'");
    }
    const std::size_t l = labels.at(id).get<std::size_t>();
    if (l >= m.k) throw std::runtime_error(path + ": label out of range for '" + id + "'");
    m.labels.push_back(l);
  }
  for (const json& s : j.at("merges")) {
    if (!s.is_array() || s.size() != 4) throw std::runtime_error(path + ": malformed merge step");
    m.merges.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>(), s[2].get<double>(),
                        s[3].get<std::size_t>()});
  }
  for (const json& s : j.at("silhouette_by_k")) {
    if (!s.is_array() || s.size() != 2) {
      throw std::runtime_error(path + ": malformed silhouette entry");
    }
    m.silhouette_by_k.emplace_back(s[0].get<std::size_t>(), s[1].get<double>());
  }
  return m;
}

}  // namespace trajpred
