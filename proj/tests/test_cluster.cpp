#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <vector>

#include "trajpred/cluster.hpp"
#include "trajpred/rng.hpp"

using namespace trajpred;

namespace {

DistanceMatrix euclidean_matrix(const std::vector<std::pair<double, double>>& pts) {
  DistanceMatrix m;
  m.n = pts.size();
  m.d.assign(m.n * m.n, 0.0);
  for (std::size_t i = 0; i < m.n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "p%zu", i);
    m.ids.push_back(buf);
    for (std::size_t j = 0; j < m.n; ++j) {
      const double dx = pts[i].first - pts[j].first;
      const double dy = pts[i].second - pts[j].second;
      m.at(i, j) = std::hypot(dx, dy);
    }
  }
  return m;
}

// Textbook Ward merge cost between point clusters:
// 2 |A||B| / (|A|+|B|) * squared distance between centroids.
double ward_cost(const std::vector<std::pair<double, double>>& pts,
                 const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  double ax = 0, ay = 0, bx = 0, by = 0;
  for (std::size_t p : a) {
    ax += pts[p].first;
    ay += pts[p].second;
  }
  for (std::size_t p : b) {
    bx += pts[p].first;
    by += pts[p].second;
  }
  ax /= a.size();
  ay /= a.size();
  bx /= b.size();
  by /= b.size();
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double d2 = (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
  return 2.0 * na * nb / (na + nb) * d2;
}

std::vector<std::pair<double, double>> random_pts(Rng& rng, std::size_t n) {
  std::vector<std::pair<double, double>> pts(n);
  for (auto& p : pts) p = {rng.uniform() * 10.0, rng.uniform() * 10.0};
  return pts;
}

std::vector<std::pair<double, double>> blob_pts(Rng& rng,
                                                const std::vector<std::pair<double, double>>& centers,
                                                std::size_t per_blob, double spread,
                                                std::vector<std::size_t>* truth = nullptr) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      pts.push_back({centers[c].first + spread * (rng.uniform() - 0.5),
                     centers[c].second + spread * (rng.uniform() - 0.5)});
      if (truth) truth->push_back(c);
    }
  }
  return pts;
}

// Partition as a canonical set of sorted member sets.
std::set<std::vector<std::size_t>> as_partition(const std::vector<std::size_t>& labels) {
  std::size_t k = 0;
  for (std::size_t l : labels) k = std::max(k, l + 1);
  std::vector<std::vector<std::size_t>> cells(k);
  for (std::size_t i = 0; i < labels.size(); ++i) cells[labels[i]].push_back(i);
  return {cells.begin(), cells.end()};
}

}  // namespace

TEST_CASE("merge choices and heights match the centroid form of the Ward criterion") {
  for (std::uint64_t seed : {501ull, 502ull, 503ull}) {
    Rng rng(seed);
    const auto pts = random_pts(rng, 12);
    const DistanceMatrix dist = euclidean_matrix(pts);
    const ClusterModel m = agglomerate(dist, 1);
    REQUIRE(m.merges.size() == 11);

    // replay with independent bookkeeping
    std::vector<std::vector<std::size_t>> members(pts.size());
    std::vector<bool> active(pts.size(), true);
    for (std::size_t i = 0; i < pts.size(); ++i) members[i] = {i};
    for (const MergeStep& step : m.merges) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!active[i]) continue;
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
          if (!active[j]) continue;
          best = std::min(best, ward_cost(pts, members[i], members[j]));
        }
      }
      const double chosen = ward_cost(pts, members[step.a], members[step.b]);
      CHECK(chosen == doctest::Approx(best).epsilon(1e-9));
      CHECK(step.height * step.height == doctest::Approx(chosen).epsilon(1e-9));

      REQUIRE(step.a < step.b);
      REQUIRE(active[step.a]);
      REQUIRE(active[step.b]);
      members[step.a].insert(members[step.a].end(), members[step.b].begin(),
                             members[step.b].end());
      CHECK(step.size == members[step.a].size());
      active[step.b] = false;
    }
  }
}

TEST_CASE("consecutive cuts are nested: k-1 unions exactly two clusters of k") {
  Rng rng(510);
  const auto pts = random_pts(rng, 14);
  const DistanceMatrix dist = euclidean_matrix(pts);
  for (std::size_t k = 3; k <= 13; ++k) {
    const auto fine = as_partition(agglomerate(dist, k).labels);
    const auto coarse = as_partition(agglomerate(dist, k - 1).labels);
    REQUIRE(fine.size() == k);
    REQUIRE(coarse.size() == k - 1);
    std::size_t shared = 0;
    for (const auto& cell : coarse) {
      if (fine.count(cell)) ++shared;
    }
    CHECK(shared == k - 2);  // all but the merged pair carry over unchanged
  }
}

TEST_CASE("agglomerate edge cuts") {
  Rng rng(511);
  const DistanceMatrix dist = euclidean_matrix(random_pts(rng, 7));

  const ClusterModel singletons = agglomerate(dist, 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(singletons.labels[i] == i);

  const ClusterModel one = agglomerate(dist, 1);
  for (std::size_t l : one.labels) CHECK(l == 0);

  CHECK_THROWS(agglomerate(dist, 0));
  CHECK_THROWS(agglomerate(dist, 8));
}

TEST_CASE("equidistant points merge by smallest index pair") {
  DistanceMatrix dist;
  dist.n = 4;
  dist.ids = {"a", "b", "c", "d"};
  dist.d.assign(16, 1.0);
  for (std::size_t i = 0; i < 4; ++i) dist.at(i, i) = 0.0;

  const ClusterModel m = agglomerate(dist, 1);
  REQUIRE(m.merges.size() == 3);
  CHECK(m.merges[0].a == 0);
  CHECK(m.merges[0].b == 1);
  CHECK(m.merges[1].a == 0);
  CHECK(m.merges[1].b == 2);
  CHECK(m.merges[2].a == 0);
  CHECK(m.merges[2].b == 3);
  for (const MergeStep& s : m.merges) CHECK(s.height == 1.0);

  const ClusterModel cut = agglomerate(dist, 2);
  CHECK(cut.labels == std::vector<std::size_t>{0, 0, 0, 1});
}

TEST_CASE("silhouette of coincident pairs in two separated clusters is 1") {
  DistanceMatrix dist;
  dist.n = 4;
  dist.ids = {"a", "b", "c", "d"};
  dist.d.assign(16, 5.0);
  for (std::size_t i = 0; i < 4; ++i) dist.at(i, i) = 0.0;
  dist.at(0, 1) = dist.at(1, 0) = 0.0;
  dist.at(2, 3) = dist.at(3, 2) = 0.0;
  CHECK(silhouette(dist, {0, 0, 1, 1}) == 1.0);
}

TEST_CASE("silhouette equals a direct recomputation on random inputs") {
  Rng rng(512);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 8 + rng.index(10);
    const DistanceMatrix dist = euclidean_matrix(random_pts(rng, n));
    const std::size_t k = 2 + rng.index(3);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < k; ++i) labels[i] = i;  // every cluster non-empty
    for (std::size_t i = k; i < n; ++i) labels[i] = rng.index(k);

    // independent recomputation, clusters outer
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      std::vector<double> mean_to(k, 0.0);
      std::vector<std::size_t> count(k, 0);
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t q = 0; q < n; ++q) {
          if (labels[q] != c || q == p) continue;
          mean_to[c] += dist.at(p, q);
          ++count[c];
        }
      }
      if (count[labels[p]] == 0) continue;
      const double a = mean_to[labels[p]] / count[labels[p]];
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        if (c != labels[p]) b = std::min(b, mean_to[c] / std::max<std::size_t>(count[c], 1));
      }
      if (std::max(a, b) > 0) total += (b - a) / std::max(a, b);
    }
    CHECK(silhouette(dist, labels) == doctest::Approx(total / n).epsilon(1e-12));
  }
}

TEST_CASE("silhouette separates tight bundles and is near zero for random labels") {
  Rng rng(513);
  std::vector<std::size_t> truth;
  const auto pts = blob_pts(rng, {{0.0, 0.0}, {10.0, 0.0}}, 15, 0.2, &truth);
  const DistanceMatrix dist = euclidean_matrix(pts);
  CHECK(silhouette(dist, truth) > 0.8);

  const auto uniform = random_pts(rng, 200);
  const DistanceMatrix udist = euclidean_matrix(uniform);
  std::vector<std::size_t> labels(200);
  for (std::size_t i = 0; i < 3; ++i) labels[i] = i;
  for (std::size_t i = 3; i < 200; ++i) labels[i] = rng.index(3);
  CHECK(std::abs(silhouette(udist, labels)) < 0.15);
}

TEST_CASE("silhouette input validation") {
  Rng rng(514);
  const DistanceMatrix dist = euclidean_matrix(random_pts(rng, 5));
  CHECK_THROWS(silhouette(dist, {0, 0, 0, 0, 0}));  // one cluster
  CHECK_THROWS(silhouette(dist, {0, 0, 0, 0, 2}));  // cluster 1 empty
  CHECK_THROWS(silhouette(dist, {0, 1}));           // length mismatch
}

TEST_CASE("select_k recovers the generated mode count") {
  Rng rng(515);
  std::vector<std::size_t> truth2;
  const auto pts2 = blob_pts(rng, {{0.0, 0.0}, {10.0, 10.0}}, 20, 0.5, &truth2);
  const ClusterModel m2 = select_k(euclidean_matrix(pts2), 2, 6);
  CHECK(m2.k == 2);
  CHECK(adjusted_rand_index(m2.labels, truth2) == 1.0);
  REQUIRE(m2.silhouette_by_k.size() == 5);
  CHECK(m2.silhouette_by_k[0].first == 2);

  std::vector<std::size_t> truth3;
  const auto pts3 = blob_pts(rng, {{0.0, 0.0}, {10.0, 0.0}, {5.0, 9.0}}, 15, 0.5, &truth3);
  const ClusterModel m3 = select_k(euclidean_matrix(pts3), 2, 6);
  CHECK(m3.k == 3);
  CHECK(adjusted_rand_index(m3.labels, truth3) == 1.0);
}

TEST_CASE("select_k breaks silhouette ties toward the smallest k") {
  DistanceMatrix dist;
  dist.n = 4;
  dist.ids = {"a", "b", "c", "d"};
  dist.d.assign(16, 1.0);
  for (std::size_t i = 0; i < 4; ++i) dist.at(i, i) = 0.0;
  const ClusterModel m = select_k(dist, 2, 3);
  CHECK(m.k == 2);  // both candidates score 0
  CHECK(m.silhouette_by_k[0].second == 0.0);
  CHECK(m.silhouette_by_k[1].second == 0.0);
}

TEST_CASE("select_k is deterministic and validates its range") {
  Rng rng(516);
  const DistanceMatrix dist = euclidean_matrix(random_pts(rng, 10));
  const ClusterModel a = select_k(dist, 2, 9);
  const ClusterModel b = select_k(dist, 2, 9);
  CHECK(a.k == b.k);
  CHECK(a.labels == b.labels);
  CHECK(a.silhouette_by_k == b.silhouette_by_k);

  CHECK_THROWS(select_k(dist, 3, 2));   // empty range
  CHECK_THROWS(select_k(dist, 1, 5));   // below 2
  CHECK_THROWS(select_k(dist, 2, 10));  // above n-1
}

TEST_CASE("adjusted rand index") {
  const std::vector<std::size_t> a = {0, 0, 0, 1, 1, 1};
  CHECK(adjusted_rand_index(a, a) == 1.0);
  CHECK(adjusted_rand_index(a, {1, 1, 1, 0, 0, 0}) == 1.0);  // relabeled

  // hand-computed contingency: cells C2 sum 4, marginals 6 and 7, C2(6)=15
  const std::vector<std::size_t> b = {0, 0, 1, 1, 1, 1};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(12.0 / 37.0).epsilon(1e-12));

  CHECK_THROWS(adjusted_rand_index(a, {0, 1}));
  CHECK_THROWS(adjusted_rand_index({}, {}));
}

TEST_CASE("cluster model json round trip") {
  Rng rng(517);
  const DistanceMatrix dist = euclidean_matrix(random_pts(rng, 9));
  ClusterModel m = select_k(dist, 2, 5);

  const std::string path = "cluster_model_rt.json";
  save_cluster_model(path, m);
  const ClusterModel r = load_cluster_model(path);
  CHECK(r.k == m.k);
  CHECK(r.ids == m.ids);
  CHECK(r.labels == m.labels);
  REQUIRE(r.merges.size() == m.merges.size());
  for (std::size_t i = 0; i < m.merges.size(); ++i) {
    CHECK(r.merges[i].a == m.merges[i].a);
    CHECK(r.merges[i].b == m.merges[i].b);
    CHECK(r.merges[i].height == m.merges[i].height);  // bitwise
    CHECK(r.merges[i].size == m.merges[i].size);
  }
  CHECK(r.silhouette_by_k == m.silhouette_by_k);

  CHECK_THROWS(load_cluster_model("no_such_file.json"));
  std::remove(path.c_str());
}
