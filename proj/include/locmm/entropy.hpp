#pragma once

#include "locmm/packing.hpp"

#include <string>
#include <utility>
#include <vector>

namespace locmm {

struct EntropyEstimate {
  double epsilon = 0.0;
  double log_count = 0.0;  // natural log of the largest per-center count
  std::vector<std::pair<Vector, std::size_t>> per_center_counts;
  std::string method;

  std::size_t count() const;
};

// log M(eps/c, B(theta, eps) ∩ K).
EntropyEstimate local_entropy_at(const ConvexBody& body, const Vector& theta, double epsilon,
                                 const PackingConfig& cfg);

// The sup over theta approximated by the max over entropy_centers().
EntropyEstimate local_entropy(const ConvexBody& body, double epsilon, const PackingConfig& cfg);

// Same as local_entropy but memoized on epsilon rounded to 3 significant
// digits; the estimate is computed at the rounded value.
EntropyEstimate local_entropy_cached(const ConvexBody& body, double epsilon,
                                     const PackingConfig& cfg);
void clear_entropy_cache();

// log M(eps, K) from one packing of the whole body.
EntropyEstimate global_entropy(const ConvexBody& body, double epsilon, const PackingConfig& cfg);

// Body center, analytic extreme points, then seeded boundary points.
std::vector<Vector> entropy_centers(const ConvexBody& body, const PackingConfig& cfg);

double round_sig3(double x);

}  // namespace locmm
