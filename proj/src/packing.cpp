#include "locmm/packing.hpp"

#include "locmm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <random>
#include <unordered_map>

namespace locmm {

void PackingConfig::validate() const {
  if (!(c_const >= 8.0)) throw ValidationError("c_const must be >= 8");
  if (candidate_budget < 1 || stall_limit < 1 || center_candidates < 1)
    throw ValidationError("packing budgets must be positive");
  if (!(max_expected_count > 0)) throw ValidationError("max_expected_count must be positive");
}

std::string PackingSet::method() const {
  std::string m = lattice_used ? "greedy-sampled+lattice" : "greedy-sampled";
  m += stalled ? ";maximal-by-stall" : ";budget-exhausted";
  return m;
}

namespace {

// Uniform cell grid over the dimensions wider than one cell. With more than
// four such dimensions the 3^k neighbourhood scan stops paying off and a
// linear scan is used instead.
class NeighborIndex {
 public:
  NeighborIndex(const Vector& lo, const Vector& hi, double cell) : lo_(lo), cell_(cell) {
    for (Eigen::Index d = 0; d < lo.size(); ++d)
      if (hi[d] - lo[d] > cell) active_.push_back(d);
    linear_ = active_.size() > 4;
  }

  void insert(const Vector& p, std::uint32_t idx) {
    if (linear_) return;
    cells_[key(coords(p))].push_back(idx);
  }

  // True if some stored point has squared distance below r2 (or <= r2 when
  // `inclusive`).
  bool any_within(const Vector& x, double r2, const std::vector<Vector>& pts,
                  bool inclusive = false) const {
    auto hit = [&](const Vector& p) {
      const double d2 = (p - x).squaredNorm();
      return inclusive ? d2 <= r2 : d2 < r2;
    };
    if (linear_) {
      for (const auto& p : pts)
        if (hit(p)) return true;
      return false;
    }
    const std::vector<long> base = coords(x);
    std::vector<long> c(base.size());
    const std::size_t k = base.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < k; ++i) total *= 3;
    for (std::size_t m = 0; m < total; ++m) {
      std::size_t r = m;
      for (std::size_t i = 0; i < k; ++i) {
        c[i] = base[i] + static_cast<long>(r % 3) - 1;
        r /= 3;
      }
      auto it = cells_.find(key(c));
      if (it == cells_.end()) continue;
      for (std::uint32_t idx : it->second)
        if (hit(pts[idx])) return true;
    }
    return false;
  }

 private:
  std::vector<long> coords(const Vector& p) const {
    std::vector<long> c(active_.size());
    for (std::size_t i = 0; i < active_.size(); ++i)
      c[i] = static_cast<long>(std::floor((p[active_[i]] - lo_[active_[i]]) / cell_));
    return c;
  }
  static std::uint64_t key(const std::vector<long>& c) {
    std::uint64_t h = 0x51ed27c3a4f1b9e7ULL;
    for (long v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return h;
  }

  Vector lo_;
  double cell_;
  std::vector<Eigen::Index> active_;
  bool linear_ = false;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

std::vector<int> first_primes(int count) {
  std::vector<int> ps;
  for (int c = 2; static_cast<int>(ps.size()) < count; ++c) {
    bool prime = true;
    for (int p : ps) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) ps.push_back(c);
  }
  return ps;
}

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

BoundingBox search_region(const ConvexBody& body, const Vector& center, double radius) {
  const BoundingBox kb = body.bounding_box();
  BoundingBox r{(center.array() - radius).matrix(), (center.array() + radius).matrix()};
  r.lo = r.lo.cwiseMax(kb.lo);
  r.hi = r.hi.cwiseMin(kb.hi);
  r.hi = r.hi.cwiseMax(r.lo);
  return r;
}

void check_request(const ConvexBody& body, const Vector& center, double radius, double separation) {
  if (center.size() != body.dimension()) throw ValidationError("packing center dimension mismatch");
  if (!(radius > 0) || !std::isfinite(radius)) throw ValidationError("packing radius must be positive");
  if (!(separation > 0) || !std::isfinite(separation))
    throw ValidationError("packing separation must be positive");
}

}  // namespace

double expected_packing_count(const ConvexBody& body, const Vector& center, double radius,
                              double separation) {
  check_request(body, center, radius, separation);
  const BoundingBox r = search_region(body, center, radius);
  double est = 1.0;
  for (Eigen::Index d = 0; d < r.lo.size(); ++d)
    est *= std::min(2.0 * radius, r.hi[d] - r.lo[d]) / separation + 1.0;
  return est;
}

PackingSet greedy_packing(const ConvexBody& body, const Vector& center, double radius,
                          double separation, const PackingConfig& cfg) {
  cfg.validate();
  check_request(body, center, radius, separation);
  if (!body.contains(center, 1e-6)) throw ValidationError("packing center is not a member of the body");
  const double est = expected_packing_count(body, center, radius, separation);
  if (est > cfg.max_expected_count)
    throw ValidationError("packing request too large: estimated " + std::to_string(est) +
                          " points exceeds the limit of " + std::to_string(cfg.max_expected_count));

  PackingSet ps;
  ps.center = center;
  ps.radius = radius;
  ps.separation = separation;
  const BoundingBox region = search_region(body, center, radius);
  const Eigen::Index n = center.size();
  auto& pts = ps.points;
  NeighborIndex index(region.lo, region.hi, separation);
  auto accept = [&](const Vector& p) {
    index.insert(p, static_cast<std::uint32_t>(pts.size()));
    pts.push_back(p);
  };
  accept(center);
  auto in_set = [&](const Vector& x) {
    return (x - center).norm() <= radius && body.contains(x);
  };

  // Lattice phase. Points of center + separation·Z^n are pairwise separated.
  std::vector<long> kmin(n), kmax(n);
  double lattice_size = 1.0;
  for (Eigen::Index d = 0; d < n; ++d) {
    kmin[d] = static_cast<long>(std::ceil((region.lo[d] - center[d]) / separation));
    kmax[d] = static_cast<long>(std::floor((region.hi[d] - center[d]) / separation));
    kmin[d] = std::min(kmin[d], 0L);
    kmax[d] = std::max(kmax[d], 0L);
    lattice_size *= static_cast<double>(kmax[d] - kmin[d] + 1);
  }
  const double thr = separation * separation * (1.0 - 1e-12);
  int stall = 0;
  auto offer = [&](const Vector& cand) {
    if (index.any_within(cand, thr, pts)) {
      ++stall;
      return;
    }
    accept(cand);
    stall = 0;
  };
  if (lattice_size <= static_cast<double>(cfg.lattice_budget)) {
    ps.lattice_used = true;
    const std::size_t total = static_cast<std::size_t>(lattice_size);
    std::vector<std::size_t> stride(n);
    std::size_t acc = 1;
    for (Eigen::Index d = 0; d < n; ++d) {
      stride[d] = acc;
      acc *= static_cast<std::size_t>(kmax[d] - kmin[d] + 1);
    }
    auto point_at = [&](std::size_t lin, std::vector<long>& k, Vector& z) {
      for (Eigen::Index d = 0; d < n; ++d) {
        k[d] = kmin[d] + static_cast<long>((lin / stride[d]) % static_cast<std::size_t>(kmax[d] - kmin[d] + 1));
        z[d] = center[d] + separation * static_cast<double>(k[d]);
      }
    };
    std::vector<char> inside(total, 0);
    std::vector<long> k(n);
    Vector z(n);
    for (std::size_t lin = 0; lin < total; ++lin) {
      point_at(lin, k, z);
      bool origin = true;
      for (Eigen::Index d = 0; d < n; ++d) origin = origin && k[d] == 0;
      if (origin) {
        inside[lin] = 1;
        continue;
      }
      if (in_set(z)) {
        inside[lin] = 1;
        accept(z);
      }
    }
    // Lattice points just outside the set, next to an inside one, are pulled
    // onto the boundary; this fills the slivers the lattice misses.
    for (std::size_t lin = 0; lin < total; ++lin) {
      if (inside[lin]) continue;
      point_at(lin, k, z);
      bool near = false;
      for (Eigen::Index d = 0; d < n && !near; ++d) {
        if (k[d] > kmin[d] && inside[lin - stride[d]]) near = true;
        if (k[d] < kmax[d] && inside[lin + stride[d]]) near = true;
      }
      if (!near) continue;
      try {
        offer(project_localized(body, center, radius, z));
      } catch (const NumericalError&) {
        ++ps.projection_failures;
      }
    }
    stall = 0;
  }

  // Sampled phase: randomly shifted Halton points over the search region.
  std::mt19937_64 rng(derive_seed(cfg.seed, {hash_vector(center)}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector shift(n);
  for (Eigen::Index d = 0; d < n; ++d) shift[d] = unif(rng);
  const std::vector<int> primes = first_primes(static_cast<int>(n));
  const Vector width = region.hi - region.lo;
  Vector x(n);
  for (int i = 0; i < cfg.candidate_budget; ++i) {
    ++ps.candidates_drawn;
    for (Eigen::Index d = 0; d < n; ++d) {
      double u = radical_inverse(static_cast<std::uint64_t>(i) + 1, primes[d]) + shift[d];
      u -= std::floor(u);
      x[d] = region.lo[d] + width[d] * u;
    }
    Vector cand;
    if (in_set(x)) {
      cand = x;
    } else {
      try {
        cand = project_localized(body, center, radius, x);
      } catch (const NumericalError&) {
        ++ps.projection_failures;
        if (++stall >= cfg.stall_limit) {
          ps.stalled = true;
          break;
        }
        continue;
      }
    }
    offer(cand);
    if (stall >= cfg.stall_limit) {
      ps.stalled = true;
      break;
    }
  }
  std::sort(pts.begin(), pts.end(), lex_less);
  return ps;
}

namespace {

struct PackingCache {
  std::mutex mu;
  std::unordered_map<std::string, std::shared_ptr<const PackingSet>> map;
};

PackingCache& packing_cache() {
  static PackingCache cache;
  return cache;
}

void append_bytes(std::string& key, const void* p, std::size_t n) {
  key.append(static_cast<const char*>(p), n);
}

}  // namespace

std::shared_ptr<const PackingSet> cached_packing(const ConvexBody& body, const Vector& center,
                                                 double radius, double separation,
                                                 const PackingConfig& cfg) {
  std::string key = body.digest();
  key.push_back('\0');
  for (Eigen::Index i = 0; i < center.size(); ++i) {
    const std::uint64_t b = double_bits(center[i]);
    append_bytes(key, &b, sizeof b);
  }
  for (double v : {radius, separation, cfg.max_expected_count}) {
    const std::uint64_t b = double_bits(v);
    append_bytes(key, &b, sizeof b);
  }
  const std::uint64_t ints[] = {cfg.seed, static_cast<std::uint64_t>(cfg.candidate_budget),
                                static_cast<std::uint64_t>(cfg.stall_limit),
                                static_cast<std::uint64_t>(cfg.lattice_budget)};
  append_bytes(key, ints, sizeof ints);

  auto& cache = packing_cache();
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    auto it = cache.map.find(key);
    if (it != cache.map.end()) return it->second;
  }
  auto ps = std::make_shared<const PackingSet>(greedy_packing(body, center, radius, separation, cfg));
  std::lock_guard<std::mutex> lock(cache.mu);
  if (cache.map.size() > 20000) cache.map.clear();
  cache.map.emplace(std::move(key), ps);
  return ps;
}

void clear_packing_cache() {
  auto& cache = packing_cache();
  std::lock_guard<std::mutex> lock(cache.mu);
  cache.map.clear();
}

bool verify_packing(const PackingSet& ps) {
  const double floor2 = std::pow(std::max(ps.separation - 1e-9, 0.0), 2);
  for (std::size_t i = 0; i < ps.points.size(); ++i) {
    if (ps.center.size() == ps.points[i].size() && ps.radius > 0 &&
        (ps.points[i] - ps.center).norm() > ps.radius + 1e-6)
      return false;
    for (std::size_t j = i + 1; j < ps.points.size(); ++j)
      if ((ps.points[i] - ps.points[j]).squaredNorm() < floor2) return false;
  }
  return true;
}

bool verify_packing(const ConvexBody& body, const PackingSet& ps) {
  if (!verify_packing(ps)) return false;
  for (const auto& p : ps.points)
    if (!body.contains(p, 1e-6)) return false;
  return true;
}

double certify_covering(const ConvexBody& body, const PackingSet& ps, int probe_count,
                        std::uint64_t seed) {
  if (probe_count < 1) throw ValidationError("probe_count must be >= 1");
  check_request(body, ps.center, ps.radius, ps.separation);
  const BoundingBox region = search_region(body, ps.center, ps.radius);
  NeighborIndex index(region.lo, region.hi, ps.separation);
  for (std::size_t i = 0; i < ps.points.size(); ++i)
    index.insert(ps.points[i], static_cast<std::uint32_t>(i));
  std::mt19937_64 rng(derive_seed(seed, {0x636f766572ULL}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::Index n = ps.center.size();
  const double r2 = ps.separation * ps.separation * (1.0 + 1e-12);
  const long max_attempts = 10000L * probe_count;
  long attempts = 0;
  int accepted = 0, covered = 0;
  Vector x(n);
  while (accepted < probe_count) {
    if (++attempts > max_attempts)
      throw NumericalError("covering sampler rejection rate exceeded 0.9999");
    for (Eigen::Index d = 0; d < n; ++d)
      x[d] = region.lo[d] + (region.hi[d] - region.lo[d]) * unif(rng);
    if ((x - ps.center).norm() > ps.radius || !body.contains(x)) continue;
    ++accepted;
    if (index.any_within(x, r2, ps.points, true)) ++covered;
  }
  return static_cast<double>(covered) / probe_count;
}

std::vector<std::size_t> greedy_packing_finite(const std::vector<Vector>& points,
                                               std::size_t first, double separation) {
  if (points.empty()) return {};
  if (first >= points.size()) throw ValidationError("start index out of range");
  const double thr = separation * separation * (1.0 - 1e-12);
  std::vector<std::size_t> chosen{first};
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == first) continue;
    bool ok = true;
    for (std::size_t c : chosen)
      if ((points[c] - points[i]).squaredNorm() < thr) {
        ok = false;
        break;
      }
    if (ok) chosen.push_back(i);
  }
  return chosen;
}

}  // namespace locmm
