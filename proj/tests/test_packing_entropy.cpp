#include "doctest.h"

#include "locmm/entropy.hpp"

#include <cmath>
#include <cstring>
#include <limits>

using locmm::ConvexBody;
using locmm::PackingConfig;
using locmm::PackingSet;
using locmm::Vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

ConvexBody segment() { return ConvexBody::hyperrectangle(vec({2})); }
ConvexBody square() { return ConvexBody::hyperrectangle(vec({2, 2})); }

}  // namespace

TEST_CASE("greedy_packing: segment cardinality") {
  PackingConfig cfg;
  auto ps = locmm::greedy_packing(segment(), vec({0}), 1.0, 0.5, cfg);
  CHECK(ps.size() >= 3);
  CHECK(ps.size() <= 5);
  CHECK(locmm::verify_packing(segment(), ps));
  CHECK(ps.points.front()[0] < ps.points.back()[0]);
}

TEST_CASE("greedy_packing: separation beyond twice the radius keeps only the center") {
  PackingConfig cfg;
  auto ps = locmm::greedy_packing(segment(), vec({0.3}), 0.2, 0.45, cfg);
  REQUIRE(ps.size() == 1);
  CHECK(ps.points[0] == vec({0.3}));
  auto ball = ConvexBody::ball(vec({0, 0}), 1.0);
  CHECK(locmm::greedy_packing(ball, vec({0, 0}), 1.0, 2.5, cfg).size() == 1);
}

TEST_CASE("greedy_packing: square with separation 2.9 holds at most two points") {
  PackingConfig cfg;
  auto ps = locmm::greedy_packing(square(), vec({0, 0}), 10.0, 2.9, cfg);
  CHECK(ps.size() <= 2);
  CHECK(locmm::verify_packing(square(), ps));

  // Brute force on a 0.05 grid: no triple of grid points is pairwise 2.9 apart.
  std::vector<Vector> grid;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) grid.push_back(vec({-1 + 0.05 * i, -1 + 0.05 * j}));
  bool triple = false;
  for (std::size_t a = 0; a < grid.size() && !triple; ++a)
    for (std::size_t b = a + 1; b < grid.size() && !triple; ++b) {
      if ((grid[a] - grid[b]).norm() < 2.9) continue;
      for (const auto& c : grid)
        if ((c - grid[a]).norm() >= 2.9 && (c - grid[b]).norm() >= 2.9) triple = true;
    }
  CHECK_FALSE(triple);
}

TEST_CASE("verify_packing: examples") {
  PackingSet ps;
  ps.center = vec({0});
  ps.radius = 1.0;
  ps.separation = 0.5;
  ps.points = {vec({0}), vec({0.4})};
  CHECK_FALSE(locmm::verify_packing(ps));
  ps.points = {vec({0})};
  CHECK(locmm::verify_packing(ps));
  ps.points = {vec({-0.5}), vec({0}), vec({0.5})};
  CHECK(locmm::verify_packing(ps));
  ps.points = {vec({0}), vec({1.2})};
  CHECK_FALSE(locmm::verify_packing(ps));
}

TEST_CASE("certify_covering: examples") {
  PackingConfig cfg;
  auto ps = locmm::greedy_packing(segment(), vec({0}), 1.0, 0.5, cfg);
  CHECK(locmm::certify_covering(segment(), ps, 10000, 1) == 1.0);

  PackingSet lone;
  lone.center = vec({0});
  lone.radius = 1.0;
  lone.separation = 0.5;
  lone.points = {vec({-0.75})};
  CHECK(locmm::certify_covering(segment(), lone, 10000, 1) < 1.0);

  auto ball = ConvexBody::ball(vec({0, 0}), 1.0);
  PackingSet single;
  single.center = vec({0, 0});
  single.radius = 1.0;
  single.separation = 2.0;
  single.points = {vec({0, 0})};
  CHECK(locmm::certify_covering(ball, single, 10000, 1) == 1.0);
  CHECK_THROWS_AS(locmm::certify_covering(ball, single, 0, 1), locmm::ValidationError);
}

TEST_CASE("greedy packings are separated and cover") {
  PackingConfig cfg;
  const std::vector<std::pair<ConvexBody, Vector>> cases{
      {segment(), vec({0.9})},
      {square(), vec({1, 1})},
      {square(), vec({0.2, -0.4})},
      {ConvexBody::ellipsoid(vec({1, 4})), vec({0, 2})},
      {ConvexBody::ellipsoid(vec({1, 4})), vec({0.3, 0.1})},
      {ConvexBody::l1_ball(2, 1.0), vec({1, 0})},
      {ConvexBody::l1_ball(2, 1.0), vec({0, 0})},
  };
  for (const auto& [body, c] : cases) {
    for (double eps : {0.3, 1.0}) {
      CAPTURE(eps);
      auto ps = locmm::greedy_packing(body, c, eps, eps / cfg.c_const, cfg);
      CHECK(locmm::verify_packing(body, ps));
      CHECK(locmm::certify_covering(body, ps, 10000, 7) >= 0.999);
    }
  }
}

TEST_CASE("greedy_packing is deterministic and seed-sensitive only through candidates") {
  PackingConfig cfg;
  cfg.seed = 99;
  auto body = ConvexBody::ellipsoid(vec({1, 4, 9}));
  auto a = locmm::greedy_packing(body, vec({0.1, 0.2, 0.3}), 0.8, 0.1, cfg);
  auto b = locmm::greedy_packing(body, vec({0.1, 0.2, 0.3}), 0.8, 0.1, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (Eigen::Index d = 0; d < 3; ++d)
      CHECK(std::memcmp(&a.points[i][d], &b.points[i][d], sizeof(double)) == 0);
  CHECK(locmm::verify_packing(body, a));
}

TEST_CASE("greedy_packing rejects bad requests") {
  PackingConfig cfg;
  CHECK_THROWS_AS(locmm::greedy_packing(segment(), vec({3}), 1.0, 0.5, cfg), locmm::ValidationError);
  CHECK_THROWS_AS(locmm::greedy_packing(segment(), vec({0}), 0.0, 0.5, cfg), locmm::ValidationError);
  CHECK_THROWS_AS(locmm::greedy_packing(segment(), vec({0}), 1.0, -1, cfg), locmm::ValidationError);
  auto big = ConvexBody::hyperrectangle(Vector::Constant(8, 2.0));
  CHECK_THROWS_AS(locmm::greedy_packing(big, Vector::Zero(8), 1.0, 0.01, cfg), locmm::ValidationError);
  PackingConfig bad;
  bad.c_const = 4;
  CHECK_THROWS_AS(bad.validate(), locmm::ValidationError);
}

TEST_CASE("greedy_packing_finite follows index order") {
  std::vector<Vector> pts{vec({0}), vec({0.3}), vec({1.0}), vec({0.6}), vec({-0.5})};
  auto idx = locmm::greedy_packing_finite(pts, 1, 0.5);
  CHECK(idx == std::vector<std::size_t>{1, 2, 4});
}

TEST_CASE("local_entropy_at: segment examples") {
  PackingConfig cfg;
  auto e = locmm::local_entropy_at(segment(), vec({0}), 40.0, cfg);
  CHECK(e.log_count == 0.0);
  auto half = locmm::local_entropy_at(segment(), vec({0}), 0.5, cfg);
  CHECK(half.count() >= 17);
  CHECK(half.count() <= 33);
  auto quarter = locmm::local_entropy_at(segment(), vec({0}), 0.25, cfg);
  CHECK(quarter.count() == half.count());
  CHECK(half.log_count == doctest::Approx(std::log(static_cast<double>(half.count()))));
}

TEST_CASE("local_entropy: examples") {
  PackingConfig cfg;
  for (double eps : {4.0, 6.0, 10.0}) {
    auto e = locmm::local_entropy(segment(), eps, cfg);
    CHECK(e.count() <= 9);
    CHECK(e.count() >= 1);
  }
  auto box = locmm::local_entropy(square(), 0.5, cfg);
  auto at_vertex = locmm::local_entropy_at(square(), vec({1, 1}), 0.5, cfg);
  auto at_center = locmm::local_entropy_at(square(), vec({0, 0}), 0.5, cfg);
  CHECK(at_center.count() >= at_vertex.count());
  CHECK(box.count() >= at_center.count());
  CHECK(box.per_center_counts.size() <= static_cast<std::size_t>(cfg.center_candidates));

  auto prod = ConvexBody::product({segment(), segment()});
  for (double eps : {0.5, 2.0}) {
    auto p = locmm::local_entropy(prod, eps, cfg);
    auto s = locmm::local_entropy(segment(), eps, cfg);
    CHECK(p.log_count >= s.log_count);
  }
}

TEST_CASE("local_entropy is monotone within slack") {
  PackingConfig cfg;
  const std::vector<ConvexBody> bodies{segment(), square(), ConvexBody::ellipsoid(vec({1, 4})),
                                       ConvexBody::l1_ball(2, 1.0)};
  for (const auto& body : bodies) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10; ++i) {
      const double eps = 0.1 * std::pow(40.0, i / 9.0);
      const double lc = locmm::local_entropy(body, eps, cfg).log_count;
      CHECK(lc <= prev + 0.2);
      prev = lc;
    }
  }
}

TEST_CASE("local and global entropy sandwich") {
  PackingConfig cfg;
  const std::vector<ConvexBody> bodies{segment(), square(), ConvexBody::ellipsoid(vec({1, 4})),
                                       ConvexBody::l1_ball(2, 1.0)};
  for (const auto& body : bodies) {
    for (double eps : {0.5, 1.0, 2.0}) {
      CAPTURE(eps);
      const double loc = locmm::local_entropy(body, eps, cfg).log_count;
      const double fine = locmm::global_entropy(body, eps / cfg.c_const, cfg).log_count;
      const double coarse = locmm::global_entropy(body, eps, cfg).log_count;
      CHECK(fine >= loc);
      CHECK(loc >= fine - coarse - 0.2);
    }
  }
}

TEST_CASE("global_entropy: examples") {
  PackingConfig cfg;
  CHECK(locmm::global_entropy(segment(), 2.0, cfg).log_count == 0.0);
  CHECK(locmm::global_entropy(segment(), 5.0, cfg).log_count == 0.0);
  auto s = locmm::global_entropy(segment(), 0.5, cfg);
  CHECK(s.count() >= 3);
  CHECK(s.count() <= 5);
  auto q = locmm::global_entropy(square(), 0.5, cfg);
  CHECK(q.count() >= 16);
  CHECK(q.count() <= 25);
  CHECK_THROWS_AS(locmm::global_entropy(ConvexBody::orthant(2), 0.5, cfg), locmm::ValidationError);
}

TEST_CASE("local_entropy_cached rounds epsilon") {
  PackingConfig cfg;
  auto a = locmm::local_entropy_cached(square(), 0.50004, cfg);
  auto b = locmm::local_entropy_cached(square(), 0.5, cfg);
  CHECK(a.epsilon == b.epsilon);
  CHECK(a.log_count == b.log_count);
  CHECK(locmm::round_sig3(0.012345) == doctest::Approx(0.0123));
}

namespace {

struct OracleRow {
  double delta;
  int m2, n1, m1;
  std::vector<std::pair<int, int>> pack2, cover, pack1;
};

const std::vector<OracleRow> kOracle{
#include "oracles/packing_covering_table.inc"
};

Vector grid_point(std::pair<int, int> ij) { return vec({-1 + ij.first / 8.0, -1 + ij.second / 8.0}); }

}  // namespace

TEST_CASE("packing-covering sandwich on the square grid") {
  std::vector<Vector> grid;
  for (int i = 0; i <= 16; ++i)
    for (int j = 0; j <= 16; ++j) grid.push_back(grid_point({i, j}));
  for (const auto& row : kOracle) {
    CAPTURE(row.delta);
    CHECK(row.m2 <= row.n1);
    CHECK(row.n1 <= row.m1);
    REQUIRE(row.pack2.size() == static_cast<std::size_t>(row.m2));
    REQUIRE(row.cover.size() == static_cast<std::size_t>(row.n1));
    REQUIRE(row.pack1.size() == static_cast<std::size_t>(row.m1));
    auto separated = [](const std::vector<std::pair<int, int>>& ids, double sep) {
      for (std::size_t a = 0; a < ids.size(); ++a)
        for (std::size_t b = a + 1; b < ids.size(); ++b)
          if ((grid_point(ids[a]) - grid_point(ids[b])).norm() < sep - 1e-12) return false;
      return true;
    };
    CHECK(separated(row.pack2, 2 * row.delta));
    CHECK(separated(row.pack1, row.delta));
    for (const auto& g : grid) {
      bool hit = false;
      for (const auto& c : row.cover) hit = hit || (g - grid_point(c)).norm() < row.delta - 1e-12;
      CHECK(hit);
    }
    // A maximal delta-packing of the grid is a strict delta-cover, so its size sits between N and M.
    auto greedy = locmm::greedy_packing_finite(grid, grid.size() / 2, row.delta);
    CHECK(greedy.size() >= static_cast<std::size_t>(row.n1));
    CHECK(greedy.size() <= static_cast<std::size_t>(row.m1));
  }
}
