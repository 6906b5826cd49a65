#include "locmm/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace locmm {

void RateConfig::validate() const {
  packing.validate();
  if (!(rel_tol > 0) || rel_tol >= 1) throw ValidationError("rel_tol must lie in (0, 1)");
  if (max_iter < 1) throw ValidationError("max_iter must be positive");
  if (!(maurey_c > 0) || !std::isfinite(maurey_c)) throw ValidationError("maurey_c must be positive");
}

namespace {

void check_sigma(double sigma) {
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw ValidationError("sigma must be finite and non-negative");
}

// g(eps) = eps^2/sigma^2 - log_m(eps) is nondecreasing; find where it turns positive.
RateResult solve_rate(const std::function<EntropyEstimate(double)>& entropy, double sigma,
                      double hi, double diameter, bool bounded, const RateConfig& cfg) {
  RateResult r;
  bool exhausted = false;
  auto g = [&](double eps) {
    const EntropyEstimate e = entropy(eps);
    exhausted = exhausted || e.method.find("budget-exhausted") != std::string::npos;
    r.entropy_trace.emplace_back(e.epsilon, e.log_count);
    return eps * eps / (sigma * sigma) - e.log_count;
  };
  r.method = "bisection";
  if (g(hi) <= 0) {
    r.epsilon_star = hi;
    r.method += ";bracket-top";
  } else {
    double lo = 0;
    for (int it = 0; it < cfg.max_iter && hi - lo > cfg.rel_tol * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (g(mid) > 0)
        hi = mid;
      else
        lo = mid;
    }
    r.epsilon_star = 0.5 * (lo + hi);
  }
  r.rate_sq = r.epsilon_star * r.epsilon_star;
  if (bounded) r.rate_sq = std::min(r.rate_sq, diameter * diameter);
  if (exhausted) r.method += ";budget-exhausted";
  return r;
}

}  // namespace

RateResult epsilon_star(const ConvexBody& body, double sigma, const RateConfig& cfg) {
  cfg.validate();
  check_sigma(sigma);
  if (sigma == 0) {
    RateResult r;
    r.method = "noiseless";
    return r;
  }
  const bool bounded = body.bounded();
  const double d = bounded ? body.diameter() : std::numeric_limits<double>::infinity();
  if (bounded && d == 0) {
    RateResult r;
    r.method = "single-point";
    return r;
  }
  const double hi = bounded ? d : std::ldexp(sigma, 20);
  return solve_rate([&](double eps) { return local_entropy_cached(body, eps, cfg.packing); }, sigma,
                    hi, d, bounded, cfg);
}

RateResult rate_product(const std::vector<ConvexBody>& components, double sigma,
                        const RateConfig& cfg) {
  cfg.validate();
  check_sigma(sigma);
  if (components.size() < 2) throw ValidationError("rate_product needs at least two components");
  bool bounded = true;
  double d2 = 0;
  for (const auto& c : components) {
    bounded = bounded && c.bounded();
    if (c.bounded()) d2 += c.diameter() * c.diameter();
  }
  const double d = bounded ? std::sqrt(d2) : std::numeric_limits<double>::infinity();
  if (sigma == 0 || (bounded && d == 0)) {
    RateResult r;
    r.method = sigma == 0 ? "noiseless" : "single-point";
    return r;
  }
  auto entropy = [&](double eps) {
    EntropyEstimate best;
    bool first = true;
    for (const auto& c : components) {
      if (c.bounded() && c.diameter() == 0) continue;
      EntropyEstimate e = local_entropy_cached(c, eps, cfg.packing);
      if (first || e.log_count > best.log_count) best = e;
      first = false;
    }
    if (first) best.epsilon = eps;
    return best;
  };
  RateResult r = solve_rate(entropy, sigma, bounded ? d : std::ldexp(sigma, 20), d, bounded, cfg);
  r.method += ";max-over-components";
  return r;
}

FanoBound fano_bound(const std::vector<Vector>& points, double sigma, double epsilon) {
  check_sigma(sigma);
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be non-negative");
  FanoBound f;
  f.separation = epsilon;
  f.m = points.size();
  if (points.size() < 2) return f;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != points[0].size()) throw ValidationError("points differ in dimension");
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if ((points[i] - points[j]).norm() < epsilon - 1e-9)
        throw ValidationError("points are not epsilon-separated");
  }
  Vector centroid = Vector::Zero(points[0].size());
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double spread = 0;
  for (const auto& p : points) spread = std::max(spread, (p - centroid).squaredNorm());
  if (sigma == 0) {
    f.info_bound = spread > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    f.info_bound = spread / (2 * sigma * sigma);
  }
  const double frac = (f.info_bound + std::log(2.0)) / std::log(static_cast<double>(f.m));
  f.lower_bound = std::max(0.0, epsilon * epsilon / 4 * (1 - frac));
  return f;
}

namespace {

void check_ascending_positive(const Vector& a) {
  if (a.size() == 0) throw ValidationError("need at least one parameter");
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0) || !std::isfinite(a[i])) throw ValidationError("parameters must be positive");
    if (i > 0 && a[i] < a[i - 1]) throw ValidationError("parameters must be ascending");
  }
}

}  // namespace

double rate_hyperrectangle(const Vector& a, double sigma) {
  check_ascending_positive(a);
  check_sigma(sigma);
  const Eigen::Index n = a.size();
  const double s2 = sigma * sigma;
  const double d2 = a.squaredNorm();
  if (d2 <= s2) return d2;
  // Largest k with (k+1) sigma^2 <= sum_{i <= n-k} a_i^2; the second condition
  // then holds because k+1 fails the first.
  int k = -1;
  for (Eigen::Index j = 0; j < n; ++j)
    if (static_cast<double>(j + 1) * s2 <= a.head(n - j).squaredNorm()) k = static_cast<int>(j);
  if (k < 0) throw NumericalError("hyperrectangle closed form found no valid k");
  return std::min(static_cast<double>(k + 2) * s2, d2);
}

double kolmogorov_width_ellipse(const Vector& a, int k) {
  const Eigen::Index n = a.size();
  if (k < 0 || k > n) throw ValidationError("k must lie in [0, n]");
  return k == n ? 0.0 : std::sqrt(a[n - k - 1]);
}

double rate_ellipse(const Vector& a, double sigma) {
  check_ascending_positive(a);
  check_sigma(sigma);
  const Eigen::Index n = a.size();
  const double s2 = sigma * sigma;
  const double d2 = 4 * a[n - 1];
  if (a[n - 1] <= s2) return d2;
  for (Eigen::Index k = 1; k <= n; ++k) {
    const double ank = k == n ? 0.0 : a[n - k - 1];
    if (ank <= static_cast<double>(k + 1) * s2) return std::min(static_cast<double>(k + 1) * s2, d2);
  }
  throw NumericalError("ellipse closed form found no valid k");
}

double rate_quadconvex(const std::function<double(int)>& width, int n, double sigma) {
  check_sigma(sigma);
  if (n < 1) throw ValidationError("n must be positive");
  std::vector<double> d2(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    const double w = width(k);
    if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("widths must be finite and non-negative");
    d2[k] = w * w;
    if (k > 0 && d2[k] > d2[k - 1]) throw ValidationError("widths must be nonincreasing");
  }
  const double s2 = sigma * sigma;
  if (d2[0] <= s2) return d2[0];
  for (int k = 1; k <= n; ++k)
    if (d2[k] <= (k + 1) * s2) return std::min((k + 1) * s2, d2[0]);
  throw NumericalError("quadratically convex closed form found no valid k");
}

namespace {

bool in_window(double ratio) { return ratio >= 0.25 && ratio <= 4.0; }

}  // namespace

RegimeRate rate_l1(int n, double sigma) {
  if (n < 2) throw ValidationError("n must be at least 2");
  check_sigma(sigma);
  const double logn = std::log(static_cast<double>(n));
  const double root = std::sqrt(sigma * sigma * logn);
  RegimeRate r;
  r.rate = std::min(root, 4.0);
  if (root > 0) {
    const double ratio = std::log(root * n) / logn;
    r.regime_ok = in_window(ratio) && std::sqrt(root) >= 1.0 / std::sqrt(static_cast<double>(n));
  }
  return r;
}

RegimeRate rate_weak_lp(int n, double p, double sigma) {
  if (n < 2) throw ValidationError("n must be at least 2");
  if (!(p > 1 && p < 2)) throw ValidationError("p must lie in (1, 2)");
  check_sigma(sigma);
  const double logn = std::log(static_cast<double>(n));
  const double value = std::pow(sigma, 2 - p) * std::pow(logn, (2 - p) / 2);
  const double diam = ConvexBody::weak_lp_ball(n, p).diameter();
  RegimeRate r;
  r.rate = std::min(value, diam * diam);
  const double arg = n * std::pow(sigma, p) * std::pow(logn, p / 2);
  if (arg > 1) r.regime_ok = in_window(std::log(arg) / logn);
  return r;
}

double maurey_slack(double eps, int N, double sigma, double c, double maurey_c) {
  const double terms = std::ceil(4 * c * c / (eps * eps));
  const double rhs = terms * std::log(maurey_c + 4 * maurey_c * eps * eps * N / (c * c));
  return rhs - eps * eps / (sigma * sigma);
}

MaureyResult maurey_rate_upper(int N, double sigma, const RateConfig& cfg) {
  cfg.validate();
  if (N < 2) throw ValidationError("N must be at least 2");
  check_sigma(sigma);
  MaureyResult m;
  m.maurey_c = cfg.maurey_c;
  if (sigma == 0) return m;
  const double c = cfg.packing.c_const;
  auto ok = [&](double eps) { return maurey_slack(eps, N, sigma, c, cfg.maurey_c) >= 0; };
  double hi = 1.0;
  while (ok(hi)) {
    hi *= 2;
    if (hi > 1e12) throw NumericalError("Maurey bracket did not close");
  }
  double lo = 0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  m.epsilon_tilde = lo;
  m.rate = std::min(lo * lo, 1.0);
  return m;
}

}  // namespace locmm
