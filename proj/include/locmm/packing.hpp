#pragma once

#include "locmm/convex_bodies.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace locmm {

struct PackingConfig {
  double c_const = 16.0;
  int candidate_budget = 4000;
  int stall_limit = 500;
  int center_candidates = 32;
  std::uint64_t seed = 0;
  // Requests whose estimated point count exceeds this are rejected.
  double max_expected_count = 1e6;
  // Largest lattice scanned before the sampled phase; bigger lattices are skipped.
  std::size_t lattice_budget = std::size_t{1} << 18;

  void validate() const;
};

struct PackingSet {
  Vector center;
  double radius = 0.0;
  double separation = 0.0;
  std::vector<Vector> points;  // lexicographically sorted
  double certified_cover_fraction = -1.0;  // negative until certified
  bool lattice_used = false;
  bool stalled = false;  // ended on stall_limit rather than the budget
  int candidates_drawn = 0;
  int projection_failures = 0;

  std::size_t size() const { return points.size(); }
  std::string method() const;
};

// Greedy packing of B(center, radius) ∩ body at the given separation. The
// center is accepted first, then the lattice center + separation·Z^n (which
// is itself separated), then seeded quasi-random candidates mapped into the
// set by localized projection, until stall_limit consecutive rejections or
// the candidate budget. Depends only on (body, center, radius, separation,
// cfg), never on data.
PackingSet greedy_packing(const ConvexBody& body, const Vector& center, double radius,
                          double separation, const PackingConfig& cfg);

// Memoized greedy_packing; thread-safe.
std::shared_ptr<const PackingSet> cached_packing(const ConvexBody& body, const Vector& center,
                                                 double radius, double separation,
                                                 const PackingConfig& cfg);
void clear_packing_cache();

// Estimated point count used by the dimension guard.
double expected_packing_count(const ConvexBody& body, const Vector& center, double radius,
                              double separation);

// Pairwise separation >= separation - 1e-9 and every point in the ball.
bool verify_packing(const PackingSet& ps);
// Also checks membership in the body within 1e-6.
bool verify_packing(const ConvexBody& body, const PackingSet& ps);

// Fraction of probe_count uniform samples of B(center, radius) ∩ body lying
// within the separation of some packing point.
double certify_covering(const ConvexBody& body, const PackingSet& ps, int probe_count,
                        std::uint64_t seed);

// Greedy packing of a finite point list: `first` is taken, then the rest in
// index order. Returns the chosen indices in acceptance order.
std::vector<std::size_t> greedy_packing_finite(const std::vector<Vector>& points,
                                               std::size_t first, double separation);

}  // namespace locmm
