#pragma once

#include "locmm/entropy.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace locmm {

struct EstimatorConfig {
  PackingConfig packing;   // carries c_const and the packing seed
  double sigma_lower = 0;  // known lower bound on the noise level; 0 = unknown
  int max_depth_cap = 40;
  int unbounded_max_m = 30;
  std::optional<Vector> anchor;  // starting point; defaults per estimator
  std::uint64_t eta_seed = 0;    // seed for the splitting noise of unbounded_estimate

  void validate() const;
};

struct DepthTraceRow {
  int J;
  double epsilon_J;
  double lhs;  // eps_J^2 / sigma_lower^2
  double rhs;  // max(16 log M_loc, 16 log 2); NaN when not evaluated
};

struct DepthBound {
  int depth = 1;
  bool cap_binding = false;
  bool sigma_unknown = false;
  std::vector<DepthTraceRow> trace;
};

// Largest J <= max_depth_cap with eps_J^2/sigma^2 > max(16 log M_loc(eps_J c/(c/2-3)), 16 log 2),
// eps_J = d (c/2 - 3) / (2^{J-2} c); 1 if no J qualifies.
DepthBound depth_bound(const ConvexBody& body, double sigma_lower, const EstimatorConfig& cfg);

struct LevelRecord {
  int level;
  Vector center;
  double radius;
  double separation;
  Vector chosen;
  std::size_t cardinality;
};

struct SplitSample {
  Vector y1;  // Y + eta
  Vector y2;  // Y - eta
  std::uint64_t eta_seed;
};

struct BoundedRun {
  int m;
  double radius;
  int depth;
  Vector estimate;
};

struct EstimateTrajectory {
  double diameter = 0;  // the d governing the level radii
  int depth = 0;
  bool depth_cap_binding = false;
  std::vector<LevelRecord> levels;
  // upsilon[0] is the starting point, upsilon[k] the level-k choice.
  std::vector<Vector> upsilon;
  Vector final_point;
  std::optional<SplitSample> split;
  std::vector<BoundedRun> bounded_runs;
  std::vector<std::string> warnings;
};

// Finite-depth iterative packing estimator on a bounded body.
EstimateTrajectory iterative_estimate(const ConvexBody& body, const Vector& y, int depth,
                                      const EstimatorConfig& cfg);

// Depth from depth_bound(cfg.sigma_lower), or the cap with a warning when it is 0.
EstimateTrajectory iterative_estimate_auto(const ConvexBody& body, const Vector& y,
                                           const EstimatorConfig& cfg);

Vector lse(const ConvexBody& body, const Vector& y);

// Truncated-series estimator for an axis-aligned ellipsoid with ascending a.
Vector projection_estimate(const ConvexBody& body, const Vector& y, double sigma);
int projection_estimate_dimension(const Vector& a, double sigma);

// 1 iff ||y - nu1|| >= ||y - nu2||.
int two_point_test(const Vector& y, const Vector& nu1, const Vector& nu2);

// Sample-splitting aggregation estimator; works for unbounded bodies.
EstimateTrajectory unbounded_estimate(const ConvexBody& body, const Vector& y, double sigma,
                                      const EstimatorConfig& cfg);

// ||upsilon_m - upsilon_m'|| <= d / 2^{m-2} for all m' > m (1-based m).
bool trajectory_contracts(const EstimateTrajectory& t);

}  // namespace locmm
