#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <limits>

#include "trajpred/dtw.hpp"
#include "trajpred/rng.hpp"

using namespace trajpred;

namespace {

// Same accumulation order as the implementation so comparisons can be exact.
double point_dist(const FeatureVector& p, const FeatureVector& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
  return std::sqrt(s);
}

// Exhaustive minimum over every monotone warp path. Costs accumulate forward
// along the path, matching the dynamic program's association order, so the
// minima agree bitwise.
double brute_force_dtw(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                   double cost) {
    cost += point_dist(a[i], b[j]);
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, cost);
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, cost);
    if (j + 1 < b.size()) walk(i, j + 1, cost);
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, cost);
  };
  walk(0, 0, 0.0);
  return best;
}

std::vector<FeatureVector> random_points(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<FeatureVector> out(n, FeatureVector(d));
  for (auto& p : out)
    for (auto& v : p) v = rng.uniform() * 10.0 - 5.0;
  return out;
}

Trajectory random_traj(Rng& rng, const std::string& id, std::size_t n) {
  Trajectory t;
  t.id = id;
  for (std::size_t i = 0; i < n; ++i) {
    EnrichedState s;
    s.timestamp = static_cast<std::int64_t>(5 * i);
    s.position = {2.0 + rng.uniform(), 40.5 + rng.uniform(), 1000.0 + 9000.0 * rng.uniform()};
    s.features = {rng.uniform() * 30.0 - 15.0, 240.0 + rng.uniform() * 60.0};
    t.states.push_back(s);
  }
  return t;
}

void check_path_valid(const DtwResult& r, std::size_t na, std::size_t nb) {
  REQUIRE(!r.path.empty());
  CHECK(r.path.front() == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(r.path.back() == std::pair<std::size_t, std::size_t>{na - 1, nb - 1});
  for (std::size_t s = 1; s < r.path.size(); ++s) {
    const std::size_t di = r.path[s].first - r.path[s - 1].first;
    const std::size_t dj = r.path[s].second - r.path[s - 1].second;
    CHECK(di <= 1);
    CHECK(dj <= 1);
    CHECK(di + dj >= 1);
  }
}

}  // namespace

TEST_CASE("dtw cost equals exhaustive path enumeration on small inputs") {
  Rng rng(401);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t na = 1 + rng.index(6);
    const std::size_t nb = 1 + rng.index(6);
    const std::size_t d = 1 + rng.index(3);
    const auto a = random_points(rng, na, d);
    const auto b = random_points(rng, nb, d);
    const DtwResult r = dtw_points(a, b);
    CHECK(r.cost == brute_force_dtw(a, b));  // bitwise
    CHECK(dtw_cost_points(a, b) == r.cost);
    check_path_valid(r, na, nb);
    // path recomputation reproduces the cost exactly
    double along = 0.0;
    for (const auto& [i, j] : r.path) along += point_dist(a[i], b[j]);
    CHECK(along == r.cost);
  }
}

TEST_CASE("dtw on a known one-dimensional case") {
  const std::vector<FeatureVector> a = {{0.0}, {1.0}, {2.0}};
  const std::vector<FeatureVector> b = {{0.0}, {2.0}};
  const DtwResult r = dtw_points(a, b);
  CHECK(r.cost == 1.0);
  REQUIRE(r.path.size() == 3);
  CHECK(r.path[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(r.path[1] == std::pair<std::size_t, std::size_t>{1, 0});
  CHECK(r.path[2] == std::pair<std::size_t, std::size_t>{2, 1});
}

TEST_CASE("single-point sequences align at their distance") {
  const std::vector<FeatureVector> a = {{3.0, 4.0}};
  const std::vector<FeatureVector> b = {{0.0, 0.0}};
  const DtwResult r = dtw_points(a, b);
  CHECK(r.cost == 5.0);
  REQUIRE(r.path.size() == 1);
}

TEST_CASE("self-alignment is free and diagonal") {
  Rng rng(402);
  const Trajectory t = random_traj(rng, "self", 12);
  const DtwResult r = dtw(t, t, position_feature_dims(2));
  CHECK(r.cost == 0.0);
  REQUIRE(r.path.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(r.path[i] == std::pair<std::size_t, std::size_t>{i, i});
  }
  CHECK(ndtw(t, t, position_feature_dims(2)) == 0.0);
}

TEST_CASE("ndtw is symmetric and non-negative over random pairs") {
  Rng rng(403);
  const auto dims = position_feature_dims(2);
  for (int rep = 0; rep < 25; ++rep) {
    const Trajectory a = random_traj(rng, "a", 3 + rng.index(18));
    const Trajectory b = random_traj(rng, "b", 3 + rng.index(18));
    const double ab = ndtw(a, b, dims);
    CHECK(ab >= 0.0);
    CHECK(ndtw(b, a, dims) == ab);  // bitwise
  }
}

TEST_CASE("pooled min-max scaling maps points into the unit box") {
  Rng rng(404);
  auto a = random_points(rng, 15, 4);
  auto b = random_points(rng, 9, 4);
  minmax_scale_pair(a, b);
  for (const auto& seq : {a, b}) {
    for (const auto& p : seq) {
      for (double v : p) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("a pooled-constant dimension does not change alignment cost") {
  Rng rng(405);
  Trajectory a = random_traj(rng, "a", 10);
  Trajectory b = random_traj(rng, "b", 14);
  for (auto& s : a.states) s.position.alt = 7000.0;
  for (auto& s : b.states) s.position.alt = 7000.0;
  const double with_alt = dtw(a, b, {0, 1, 2}).cost;
  const double without_alt = dtw(a, b, {0, 1}).cost;
  CHECK(with_alt == without_alt);
}

TEST_CASE("dimension selectors and error cases") {
  CHECK(position_dims() == std::vector<std::size_t>{0, 1, 2});
  CHECK(position_feature_dims(2) == std::vector<std::size_t>{0, 1, 2, 3, 4});

  Rng rng(406);
  const Trajectory a = random_traj(rng, "a", 5);
  Trajectory empty;
  empty.id = "empty";
  CHECK_THROWS(dtw(a, empty, position_dims()));
  CHECK_THROWS(ndtw(a, a, {}));
  CHECK_THROWS(extract_dims(a, {0, 1, 2, 3, 4, 5}));  // only 2 features present
}

TEST_CASE("distance matrix is symmetric, zero-diagonal, and schedule-independent") {
  Rng rng(407);
  std::vector<Trajectory> corpus;
  for (int i = 0; i < 8; ++i) {
    corpus.push_back(random_traj(rng, "t" + std::to_string(i), 6 + rng.index(10)));
  }
  const auto dims = position_feature_dims(2);
  const DistanceMatrix par = distance_matrix(corpus, dims);
  const DistanceMatrix ser = distance_matrix_serial(corpus, dims);
  CHECK(par.d == ser.d);  // bitwise
  CHECK(par.ids == ser.ids);
  for (std::size_t i = 0; i < par.n; ++i) {
    CHECK(par.at(i, i) == 0.0);
    for (std::size_t j = 0; j < par.n; ++j) {
      CHECK(par.at(i, j) == par.at(j, i));
      CHECK(par.at(i, j) >= 0.0);
    }
  }
  // entries are exactly the pairwise ndtw values
  CHECK(par.at(0, 1) == ndtw(corpus[0], corpus[1], dims));

  corpus[1].id = "t0";
  CHECK_THROWS(distance_matrix(corpus, dims));
}
