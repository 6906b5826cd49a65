#include "locmm/estimators.hpp"

#include "locmm/rng.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace locmm {

void EstimatorConfig::validate() const {
  packing.validate();
  if (!(packing.c_const >= 8)) throw ValidationError("c_const must be at least 8");
  if (!(sigma_lower >= 0) || !std::isfinite(sigma_lower))
    throw ValidationError("sigma_lower must be finite and non-negative");
  if (max_depth_cap < 1) throw ValidationError("max_depth_cap must be at least 1");
  if (unbounded_max_m < 1) throw ValidationError("unbounded_max_m must be at least 1");
}

DepthBound depth_bound(const ConvexBody& body, double sigma_lower, const EstimatorConfig& cfg) {
  cfg.validate();
  if (!body.bounded()) throw ValidationError("depth_bound needs a bounded body");
  if (!(sigma_lower >= 0) || !std::isfinite(sigma_lower))
    throw ValidationError("sigma_lower must be finite and non-negative");
  DepthBound out;
  if (sigma_lower == 0) {
    out.depth = cfg.max_depth_cap;
    out.cap_binding = true;
    out.sigma_unknown = true;
    return out;
  }
  const double c = cfg.packing.c_const;
  const double d = body.diameter();
  const double floor16 = 16.0 * std::log(2.0);
  if (d == 0) return out;
  for (int J = 1; J <= cfg.max_depth_cap; ++J) {
    const double eps_J = d * (c / 2 - 3) / (std::ldexp(1.0, J - 2) * c);
    const double lhs = eps_J * eps_J / (sigma_lower * sigma_lower);
    DepthTraceRow row{J, eps_J, lhs, std::numeric_limits<double>::quiet_NaN()};
    if (lhs <= floor16) {
      // eps_J only shrinks from here on, so no larger J can qualify.
      out.trace.push_back(row);
      break;
    }
    const double log_m = local_entropy_cached(body, eps_J * c / (c / 2 - 3), cfg.packing).log_count;
    row.rhs = std::max(16.0 * log_m, floor16);
    out.trace.push_back(row);
    if (lhs > row.rhs) out.depth = J;
  }
  out.cap_binding = out.depth == cfg.max_depth_cap;
  return out;
}

namespace {

std::size_t nearest_index(const std::vector<Vector>& pts, const Vector& y) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dd = (pts[i] - y).squaredNorm();
    if (dd < best_d) {
      best_d = dd;
      best = i;
    }
  }
  return best;
}

void check_dims(const ConvexBody& body, const Vector& y) {
  if (y.size() != body.dimension()) throw ValidationError("dimension mismatch between y and body");
  if (!y.allFinite()) throw ValidationError("y must be finite");
}

}  // namespace

EstimateTrajectory iterative_estimate(const ConvexBody& body, const Vector& y, int depth,
                                      const EstimatorConfig& cfg) {
  cfg.validate();
  check_dims(body, y);
  if (!body.bounded()) throw ValidationError("iterative_estimate needs a bounded body");
  if (depth < 1) throw ValidationError("depth must be at least 1");
  const double C = cfg.packing.c_const / 2 - 1;
  const double d = body.diameter();

  Vector nu = cfg.anchor ? *cfg.anchor : body.center();
  if (nu.size() != body.dimension()) throw ValidationError("anchor has the wrong dimension");
  if (!body.contains(nu, 1e-9)) throw ValidationError("anchor must be a member of the body");

  EstimateTrajectory t;
  t.diameter = d;
  t.depth = depth;
  t.upsilon.push_back(nu);
  for (int k = 1; k <= depth; ++k) {
    const double radius = std::ldexp(d, -(k - 1));
    const double sep = std::ldexp(d, -k) / (C + 1);
    LevelRecord rec{k, nu, radius, sep, nu, 1};
    if (d > 0) {
      auto ps = cached_packing(body, nu, radius, sep, cfg.packing);
      rec.cardinality = ps->size();
      rec.chosen = ps->points[nearest_index(ps->points, y)];
    }
    nu = rec.chosen;
    t.levels.push_back(std::move(rec));
    t.upsilon.push_back(nu);
  }
  t.final_point = nu;
  return t;
}

EstimateTrajectory iterative_estimate_auto(const ConvexBody& body, const Vector& y,
                                           const EstimatorConfig& cfg) {
  const DepthBound db = depth_bound(body, cfg.sigma_lower, cfg);
  EstimateTrajectory t = iterative_estimate(body, y, db.depth, cfg);
  t.depth_cap_binding = db.cap_binding;
  if (db.sigma_unknown)
    t.warnings.push_back("sigma_lower unknown; depth set to max_depth_cap");
  else if (db.cap_binding)
    t.warnings.push_back("depth bound reached max_depth_cap");
  return t;
}

Vector lse(const ConvexBody& body, const Vector& y) {
  check_dims(body, y);
  return body.project(y);
}

int projection_estimate_dimension(const Vector& a, double sigma) {
  const Eigen::Index n = a.size();
  int best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k <= n; ++k) {
    const double width = n - k > 0 ? a[n - k - 1] : 0.0;
    const double obj = static_cast<double>(k) * sigma * sigma + width;
    if (obj < best) {
      best = obj;
      best_k = static_cast<int>(k);
    }
  }
  return best_k;
}

Vector projection_estimate(const ConvexBody& body, const Vector& y, double sigma) {
  if (body.kind() != BodyKind::Ellipsoid)
    throw ValidationError("projection_estimate needs an ellipsoid");
  check_dims(body, y);
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw ValidationError("sigma must be non-negative");
  const Vector a = body.parameters();
  for (Eigen::Index i = 1; i < a.size(); ++i)
    if (a[i] < a[i - 1]) throw ValidationError("projection_estimate needs ascending semi-axes");
  const int k = projection_estimate_dimension(a, sigma);
  Vector z = y;
  z.head(a.size() - k).setZero();
  return body.project(z);
}

int two_point_test(const Vector& y, const Vector& nu1, const Vector& nu2) {
  if (y.size() != nu1.size() || y.size() != nu2.size())
    throw ValidationError("dimension mismatch in two_point_test");
  return (y - nu1).squaredNorm() >= (y - nu2).squaredNorm() ? 1 : 0;
}

EstimateTrajectory unbounded_estimate(const ConvexBody& body, const Vector& y, double sigma,
                                      const EstimatorConfig& cfg) {
  cfg.validate();
  check_dims(body, y);
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw ValidationError("sigma must be non-negative");
  const Eigen::Index n = body.dimension();

  SplitSample split{y, y, cfg.eta_seed};
  {
    std::mt19937_64 rng(cfg.eta_seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    Vector eta(n);
    for (Eigen::Index i = 0; i < n; ++i) eta[i] = sigma > 0 ? gauss(rng) : 0.0;
    split.y1 = y + eta;
    split.y2 = y - eta;
  }

  Vector nu = cfg.anchor ? *cfg.anchor : body.project(Vector::Zero(n));
  if (nu.size() != n) throw ValidationError("anchor has the wrong dimension");
  if (!body.contains(nu, 1e-9)) throw ValidationError("anchor must be a member of the body");

  const double reach = (body.project(split.y1) - nu).norm();
  int m_min = 1;
  while (std::ldexp(1.0, m_min) < reach) {
    if (++m_min > cfg.unbounded_max_m)
      throw NumericalError("radius cap reached before enclosing the projected sample");
  }
  const int M = std::min(m_min + 1, cfg.unbounded_max_m);

  EstimateTrajectory t;
  EstimatorConfig inner = cfg;
  inner.anchor = nu;
  const double sigma_split = std::sqrt(2.0) * sigma;
  std::vector<Vector> candidates;
  for (int m = 1; m <= M; ++m) {
    const double radius = std::ldexp(1.0, m);
    const ConvexBody km = ConvexBody::intersect_ball(body, nu, radius);
    const DepthBound db = depth_bound(km, sigma_split, inner);
    const EstimateTrajectory run = iterative_estimate(km, split.y1, db.depth, inner);
    if (db.cap_binding)
      t.warnings.push_back("bounded run " + std::to_string(m) + " hit max_depth_cap");
    t.bounded_runs.push_back({m, radius, db.depth, run.final_point});
    candidates.push_back(run.final_point);
  }

  double d = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const double g = (candidates[i] - candidates[j]).norm();
      d = std::max(d, g);
      if (g > 0) min_gap = std::min(min_gap, g);
    }

  const double c_tilde = cfg.packing.c_const / 4 - 1;
  std::size_t current = 0;
  t.diameter = d;
  t.upsilon.push_back(candidates[current]);
  if (d > 0) {
    // Once the radius drops below the smallest gap only the current point remains.
    for (int k = 1;; ++k) {
      const double radius = std::ldexp(d, -(k - 1));
      const double sep = std::ldexp(d, -(k + 1)) / (c_tilde + 1);
      std::vector<std::size_t> in_ball;
      std::vector<Vector> pts;
      for (std::size_t i = 0; i < candidates.size(); ++i)
        if ((candidates[i] - candidates[current]).norm() <= radius) {
          in_ball.push_back(i);
          pts.push_back(candidates[i]);
        }
      std::size_t first = 0;
      while (in_ball[first] != current) ++first;
      auto chosen = greedy_packing_finite(pts, first, sep);
      std::size_t pick = in_ball[chosen.front()];
      double best = (candidates[pick] - split.y2).squaredNorm();
      for (std::size_t ci : chosen) {
        const std::size_t idx = in_ball[ci];
        const double dd = (candidates[idx] - split.y2).squaredNorm();
        if (dd < best || (dd == best && idx < pick)) {
          best = dd;
          pick = idx;
        }
      }
      t.levels.push_back({k, candidates[current], radius, sep, candidates[pick], chosen.size()});
      current = pick;
      t.upsilon.push_back(candidates[current]);
      if (radius < min_gap) break;
    }
  }
  t.depth = static_cast<int>(t.levels.size());
  t.final_point = candidates[current];
  t.split = std::move(split);
  return t;
}

bool trajectory_contracts(const EstimateTrajectory& t) {
  const double d = t.diameter;
  for (std::size_t m = 0; m < t.upsilon.size(); ++m) {
    // upsilon[m] is the 1-based Upsilon_{m+1}.
    const double bound = std::ldexp(d, -static_cast<int>(m) + 1) * (1 + 1e-12);
    for (std::size_t mp = m + 1; mp < t.upsilon.size(); ++mp)
      if ((t.upsilon[m] - t.upsilon[mp]).norm() > bound) return false;
  }
  return true;
}

}  // namespace locmm
