#pragma once

#include "locmm/entropy.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace locmm {

struct RateConfig {
  PackingConfig packing;
  double rel_tol = 1e-2;
  int max_iter = 40;
  double maurey_c = 2.0;  // the absolute constant in Maurey's entropy bound

  void validate() const;
};

struct RateResult {
  double epsilon_star = 0;
  double rate_sq = 0;
  std::vector<std::pair<double, double>> entropy_trace;  // (epsilon, log M_loc)
  std::string method;
};

// sup{eps : eps^2/sigma^2 <= log M_loc(eps)} by bisection on the sign change.
RateResult epsilon_star(const ConvexBody& body, double sigma, const RateConfig& cfg);

// Same equation with the max of the component local entropies.
RateResult rate_product(const std::vector<ConvexBody>& components, double sigma,
                        const RateConfig& cfg);

struct FanoBound {
  double separation = 0;
  std::size_t m = 0;
  double info_bound = 0;
  double lower_bound = 0;
};

// eps^2/4 (1 - (I + log 2)/log m) with I <= max_j ||mu_j - centroid||^2 / (2 sigma^2), clamped at 0.
FanoBound fano_bound(const std::vector<Vector>& points, double sigma, double epsilon);

// Closed-form rates. `a` is ascending: side lengths for the box, squared
// semi-axes for the ellipse.
double rate_hyperrectangle(const Vector& a, double sigma);
double rate_ellipse(const Vector& a, double sigma);
double kolmogorov_width_ellipse(const Vector& a, int k);
// width(k) for k = 0..n-1; d_n is 0.
double rate_quadconvex(const std::function<double(int)>& width, int n, double sigma);

struct RegimeRate {
  double rate = 0;
  bool regime_ok = false;
};

RegimeRate rate_l1(int n, double sigma);
RegimeRate rate_weak_lp(int n, double p, double sigma);

struct MaureyResult {
  double epsilon_tilde = 0;
  double rate = 0;  // epsilon_tilde^2 ∧ 1
  double maurey_c = 0;
};

// Largest eps with eps^2/sigma^2 <= ceil(4c^2/eps^2) log(C + 4 C eps^2 N / c^2).
MaureyResult maurey_rate_upper(int N, double sigma, const RateConfig& cfg);
// The inequality's slack: rhs - lhs.
double maurey_slack(double eps, int N, double sigma, double c, double maurey_c);

}  // namespace locmm
