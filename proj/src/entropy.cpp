#include "locmm/entropy.hpp"

#include "locmm/parallel.hpp"
#include "locmm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <tuple>

namespace locmm {

std::size_t EntropyEstimate::count() const {
  std::size_t best = 1;
  for (const auto& pc : per_center_counts) best = std::max(best, pc.second);
  return best;
}

double round_sig3(double x) {
  if (!(x > 0) || !std::isfinite(x)) return x;
  const double e = std::floor(std::log10(x)) - 2.0;
  const double scale = std::pow(10.0, e);
  return std::round(x / scale) * scale;
}

EntropyEstimate local_entropy_at(const ConvexBody& body, const Vector& theta, double epsilon,
                                 const PackingConfig& cfg) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be positive");
  auto ps = cached_packing(body, theta, epsilon, epsilon / cfg.c_const, cfg);
  EntropyEstimate e;
  e.epsilon = epsilon;
  e.log_count = std::log(static_cast<double>(ps->size()));
  e.per_center_counts.emplace_back(theta, ps->size());
  e.method = ps->method();
  return e;
}

std::vector<Vector> entropy_centers(const ConvexBody& body, const PackingConfig& cfg) {
  const std::size_t limit = static_cast<std::size_t>(cfg.center_candidates);
  std::vector<Vector> out;
  auto add = [&](const Vector& v) {
    if (out.size() >= limit) return;
    if (!body.contains(v, 1e-9)) return;
    for (const auto& o : out)
      if (o == v) return;
    out.push_back(v);
  };
  const Vector mid = body.center();
  add(mid);
  for (const auto& e : body.extreme_points()) add(e);

  std::mt19937_64 rng(derive_seed(cfg.seed, {0x63656e74ULL}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double reach = body.bounded() ? 2.0 * body.diameter() + 1.0 : 1.0 + mid.norm();
  Vector g(body.dimension());
  for (std::size_t tries = 0; out.size() < limit && tries < 4 * limit; ++tries) {
    for (Eigen::Index d = 0; d < g.size(); ++d) g[d] = gauss(rng);
    const double gn = g.norm();
    if (gn == 0) continue;
    add(body.project(mid + g * (reach / gn)));
  }
  return out;
}

EntropyEstimate local_entropy(const ConvexBody& body, double epsilon, const PackingConfig& cfg) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be positive");
  cfg.validate();
  const auto centers = entropy_centers(body, cfg);
  std::vector<std::shared_ptr<const PackingSet>> sets(centers.size());
  parallel_for(centers.size(), [&](std::size_t i) {
    sets[i] = cached_packing(body, centers[i], epsilon, epsilon / cfg.c_const, cfg);
  });
  EntropyEstimate e;
  e.epsilon = epsilon;
  bool exhausted = false;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    e.per_center_counts.emplace_back(centers[i], sets[i]->size());
    exhausted = exhausted || !sets[i]->stalled;
  }
  e.log_count = std::log(static_cast<double>(e.count()));
  e.method = std::string("greedy-sampled;sup-over-") + std::to_string(centers.size()) +
             "-centers-lower-bound";
  if (exhausted) e.method += ";budget-exhausted";
  return e;
}

namespace {

struct EntropyCache {
  std::mutex mu;
  std::map<std::tuple<std::string, double, std::uint64_t, double, int, int, int>, EntropyEstimate> map;
};

EntropyCache& entropy_cache() {
  static EntropyCache cache;
  return cache;
}

}  // namespace

EntropyEstimate local_entropy_cached(const ConvexBody& body, double epsilon,
                                     const PackingConfig& cfg) {
  const double eps = round_sig3(epsilon);
  auto key = std::make_tuple(body.digest(), eps, cfg.seed, cfg.c_const, cfg.candidate_budget,
                             cfg.stall_limit, cfg.center_candidates);
  auto& cache = entropy_cache();
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    auto it = cache.map.find(key);
    if (it != cache.map.end()) return it->second;
  }
  EntropyEstimate e = local_entropy(body, eps, cfg);
  std::lock_guard<std::mutex> lock(cache.mu);
  cache.map[key] = e;
  return e;
}

void clear_entropy_cache() {
  auto& cache = entropy_cache();
  std::lock_guard<std::mutex> lock(cache.mu);
  cache.map.clear();
}

EntropyEstimate global_entropy(const ConvexBody& body, double epsilon, const PackingConfig& cfg) {
  if (!body.bounded()) throw ValidationError("global entropy needs a bounded body");
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be positive");
  const Vector mid = body.center();
  EntropyEstimate e;
  e.epsilon = epsilon;
  if (body.diameter() == 0) {
    e.per_center_counts.emplace_back(mid, 1);
    e.method = "single-point";
    return e;
  }
  auto ps = cached_packing(body, mid, body.diameter(), epsilon, cfg);
  e.per_center_counts.emplace_back(mid, ps->size());
  e.log_count = std::log(static_cast<double>(ps->size()));
  e.method = ps->method();
  return e;
}

}  // namespace locmm
