// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "locmm/estimators.hpp"
#include "locmm/harness.hpp"
#include "locmm/json_io.hpp"
#include "locmm/packing.hpp"
#include "locmm/rates.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using locmm::ConvexBody;
using locmm::EstimatorConfig;
using locmm::ExperimentSpec;
using locmm::PackingConfig;
using locmm::Vector;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

ConvexBody segment() { return ConvexBody::hyperrectangle(vec({2})); }
ConvexBody square() { return ConvexBody::hyperrectangle(vec({2, 2})); }

const std::vector<double> kSigmaGrid{0.01, 0.1, 1.0, 10.0};

struct OracleRow {
  double delta;
  int m2, n1, m1;
  std::vector<std::pair<int, int>> pack2, cover, pack1;
};

const std::vector<OracleRow> kOracle{
#include "../oracles/packing_covering_table.inc"
};

Vector grid_point(std::pair<int, int> ij) { return vec({-1 + ij.first / 8.0, -1 + ij.second / 8.0}); }

// 1. M(2d) <= N(d) <= M(d) on the 17x17 grid of the square, checked from the witnesses.
Outcome packing_covering_sandwich() {
  Outcome o;
  std::vector<Vector> grid;
  for (int i = 0; i <= 16; ++i)
    for (int j = 0; j <= 16; ++j) grid.push_back(grid_point({i, j}));
  auto separated = [](const std::vector<std::pair<int, int>>& ids, double sep) {
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = a + 1; b < ids.size(); ++b)
        if ((grid_point(ids[a]) - grid_point(ids[b])).norm() < sep - 1e-12) return false;
    return true;
  };
  auto covers = [&](const std::vector<Vector>& centers, double d) {
    for (const auto& g : grid) {
      bool hit = false;
      for (const auto& c : centers) hit = hit || (g - c).norm() < d - 1e-12;
      if (!hit) return false;
    }
    return true;
  };
  for (double want : {0.2, 0.5, 1.0}) {
    const auto it = std::find_if(kOracle.begin(), kOracle.end(), [&](const OracleRow& r) { return r.delta == want; });
    if (it == kOracle.end()) return {false, "oracle row missing for delta " + fmt("%g", want)};
    const auto& row = *it;
    std::vector<Vector> cover, pack1;
    for (auto ij : row.cover) cover.push_back(grid_point(ij));
    for (auto ij : row.pack1) pack1.push_back(grid_point(ij));
    bool ok = row.pack2.size() == static_cast<std::size_t>(row.m2) && row.cover.size() == static_cast<std::size_t>(row.n1) &&
              row.pack1.size() == static_cast<std::size_t>(row.m1);
    ok = ok && separated(row.pack2, 2 * row.delta) && separated(row.pack1, row.delta) && covers(cover, row.delta);
    // Each open delta-ball holds at most one point of a 2 delta-packing.
    std::vector<int> owner(cover.size(), -1);
    for (std::size_t p = 0; p < row.pack2.size() && ok; ++p)
      for (std::size_t c = 0; c < cover.size(); ++c)
        if ((grid_point(row.pack2[p]) - cover[c]).norm() < row.delta - 1e-12) {
          if (owner[c] >= 0) ok = false;
          owner[c] = static_cast<int>(p);
        }
    // A maximal delta-packing is a strict delta-cover.
    ok = ok && covers(pack1, row.delta);
    ok = ok && row.m2 <= row.n1 && row.n1 <= row.m1;
    const auto greedy = locmm::greedy_packing_finite(grid, grid.size() / 2, row.delta);
    ok = ok && greedy.size() >= static_cast<std::size_t>(row.n1) && greedy.size() <= static_cast<std::size_t>(row.m1);
    o.pass = o.pass && ok;
    o.detail += "delta=" + fmt("%g", row.delta) + ": " + std::to_string(row.m2) + "<=" + std::to_string(row.n1) +
                "<=" + std::to_string(row.m1) + (ok ? "" : " (witness check failed)") + "; ";
  }
  return o;
}

// 2. Greedy packings with stall_limit 500 certify a 0.999 cover over 1e4 probes.
Outcome covering_certification() {
  PackingConfig cfg;
  cfg.stall_limit = 500;
  const std::vector<std::pair<ConvexBody, std::vector<Vector>>> cases{
      {segment(), {vec({0}), vec({0.9}), vec({1})}},
      {square(), {vec({0, 0}), vec({1, 1}), vec({0.2, -0.4})}},
      {ConvexBody::ellipsoid(vec({1, 4})), {vec({0, 0}), vec({0, 2}), vec({0.3, 0.1})}},
      {ConvexBody::l1_ball(2, 1.0), {vec({0, 0}), vec({1, 0}), vec({0.25, 0.25})}},
  };
  Outcome o;
  double worst = 1.0;
  int runs = 0;
  for (const auto& [body, centers] : cases)
    for (const auto& c : centers)
      for (double eps : {0.3, 1.0, 2.0}) {
        const auto ps = locmm::greedy_packing(body, c, eps, eps / cfg.c_const, cfg);
        const double frac = locmm::certify_covering(body, ps, 10000, 17 + runs);
        worst = std::min(worst, frac);
        o.pass = o.pass && frac >= 0.999 && locmm::verify_packing(body, ps);
        ++runs;
      }
  o.detail = std::to_string(runs) + " packings, min cover fraction " + fmt("%.4f", worst);
  return o;
}

// 3. Local entropy is nonincreasing within 0.2 over a 10-point grid.
Outcome entropy_monotonicity() {
  PackingConfig cfg;
  const std::vector<ConvexBody> bodies{segment(), square(), ConvexBody::ellipsoid(vec({1, 4})),
                                       ConvexBody::l1_ball(2, 1.0)};
  Outcome o;
  double worst_rise = -std::numeric_limits<double>::infinity();
  for (const auto& body : bodies) {
    std::vector<double> lc;
    for (int i = 0; i < 10; ++i) lc.push_back(locmm::local_entropy(body, 0.1 * std::pow(40.0, i / 9.0), cfg).log_count);
    for (std::size_t i = 0; i < lc.size(); ++i)
      for (std::size_t j = i + 1; j < lc.size(); ++j) worst_rise = std::max(worst_rise, lc[j] - lc[i]);
  }
  o.pass = worst_rise <= 0.2;
  o.detail = "largest increase " + fmt("%.4f", worst_rise) + " (allowed 0.2)";
  return o;
}

// 4. Closed forms reproduce the hand-derived values.
Outcome closed_form_oracles() {
  Outcome o;
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::abs(b); };
  for (double s : kSigmaGrid) {
    const double s2 = s * s;
    const bool ok = same(locmm::rate_hyperrectangle(vec({3 * s}), s), 2 * s2) &&
                    same(locmm::rate_hyperrectangle(Vector::Constant(8, 10 * s), s), 9 * s2) &&
                    same(locmm::rate_ellipse(vec({s2, 4 * s2, 9 * s2}), s), 3 * s2) &&
                    same(locmm::rate_ellipse(vec({s2, 4 * s2, 9 * s2, 16 * s2}), s), 4 * s2);
    o.pass = o.pass && ok;
  }
  o.detail = "2, 9, 3, 4 sigma^2 at sigma in {0.01, 0.1, 1, 10}";
  return o;
}

// 5. The entropy solver tracks the closed forms within a factor 32 and a stable ratio.
Outcome solver_vs_oracle() {
  struct Case {
    std::string name;
    ConvexBody body;
    std::function<double(double)> rate;
  };
  auto box = [](Vector a) {
    return Case{"box", ConvexBody::hyperrectangle(a), [a](double s) { return locmm::rate_hyperrectangle(a, s); }};
  };
  auto ell = [](Vector a) {
    return Case{"ellipsoid", ConvexBody::ellipsoid(a), [a](double s) { return locmm::rate_ellipse(a, s); }};
  };
  const std::vector<Case> cases{box(vec({2})),         box(vec({0.5, 2})),         box(vec({1, 3})),
                                box(vec({1, 2, 3})),   ell(vec({1, 4})),           ell(vec({0.25, 1, 4})),
                                ell(vec({1, 4, 9}))};
  locmm::RateConfig cfg;
  Outcome o;
  double worst_factor = 1, worst_stability = 1;
  for (const auto& c : cases) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (double s : kSigmaGrid) {
      const double r = locmm::epsilon_star(c.body, s, cfg).rate_sq / c.rate(s);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      worst_factor = std::max({worst_factor, r, 1 / r});
    }
    worst_stability = std::max(worst_stability, hi / lo);
    o.pass = o.pass && lo >= 1.0 / 32 && hi <= 32 && hi / lo <= 8;
  }
  o.detail = "4 boxes, 3 ellipsoids; worst factor " + fmt("%.3f", worst_factor) + ", worst max/min " +
             fmt("%.3f", worst_stability);
  return o;
}

// 6. Two-point test error under the exponential bound.
Outcome lemma4_bound() {
  Outcome o;
  std::uint64_t seed = 401;
  for (double C : {6.0, 8.0}) {
    const auto r = locmm::lemma4_error_experiment(C, 1.0, 1.0, 10000, seed++);
    const bool ok = r.empirical_rate <= r.bound + 3 * r.stderr_;
    o.pass = o.pass && ok;
    o.detail += "C=" + fmt("%g", C) + ": " + fmt("%.4f", r.empirical_rate) + " <= " + fmt("%.4f", r.bound) + " + 3*" +
                fmt("%.4f", r.stderr_) + "; ";
  }
  return o;
}

// 7. Every trajectory is Cauchy with the stated rate.
Outcome trajectory_contraction() {
  EstimatorConfig cfg;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  const std::vector<ConvexBody> bodies{segment(),
                                       square(),
                                       ConvexBody::ellipsoid(vec({1, 4})),
                                       ConvexBody::ellipsoid(vec({1, 4, 9})),
                                       ConvexBody::l1_ball(3, 1.0),
                                       ConvexBody::polytope({vec({0, 0}), vec({1, 0}), vec({0, 1})}),
                                       ConvexBody::hyperrectangle(vec({1, 2, 3}))};
  Outcome o;
  int runs = 0, bad = 0;
  for (int r = 0; r < 80; ++r) {
    const auto& body = bodies[static_cast<std::size_t>(r) % bodies.size()];
    Vector y(body.dimension());
    const double scale = u(rng);
    for (auto& v : y) v = scale * g(rng);
    const int depth = 1 + r % 9;
    const auto t = locmm::iterative_estimate(body, y, depth, cfg);
    bool ok = locmm::trajectory_contracts(t);
    for (const auto& p : t.upsilon) ok = ok && body.contains(p, 1e-6);
    bad += !ok;
    ++runs;
  }
  const std::vector<ConvexBody> unbounded{ConvexBody::monotone_cone(2), ConvexBody::orthant(2), segment()};
  for (int r = 0; r < 20; ++r) {
    const auto& body = unbounded[static_cast<std::size_t>(r) % unbounded.size()];
    Vector y(body.dimension());
    for (auto& v : y) v = g(rng);
    cfg.eta_seed = 9000 + static_cast<std::uint64_t>(r);
    const auto t = locmm::unbounded_estimate(body, y, 0.05 + 0.05 * (r % 4), cfg);
    bad += !locmm::trajectory_contracts(t);
    ++runs;
  }
  o.pass = bad == 0;
  o.detail = std::to_string(runs) + " runs (20 unbounded), " + std::to_string(bad) + " violations";
  return o;
}

// 8. With y = mu the estimate lands within d / 2^(J-2) of y.
Outcome noiseless_recovery() {
  EstimatorConfig cfg;
  const std::vector<ConvexBody> bodies{segment(),
                                       square(),
                                       ConvexBody::ellipsoid(vec({1, 4})),
                                       ConvexBody::ellipsoid(vec({1, 4, 9})),
                                       ConvexBody::l1_ball(3, 1.0),
                                       ConvexBody::polytope({vec({0, 0}), vec({1, 0}), vec({0, 1})}),
                                       ConvexBody::hyperrectangle(vec({1, 2, 3}))};
  Outcome o;
  double worst = 0;
  int runs = 0;
  for (const auto& body : bodies) {
    auto truths = locmm::generate_truth_points(body, "extremes", 4, 5);
    truths.push_back(body.center());
    for (double sl : {0.01, 0.0}) {
      const auto db = locmm::depth_bound(body, sl, cfg);
      for (const auto& mu : truths) {
        const auto t = locmm::iterative_estimate(body, mu, db.depth, cfg);
        const double bound = std::ldexp(body.diameter(), 2 - db.depth);
        const double err = (t.final_point - mu).norm();
        worst = std::max(worst, err / bound);
        o.pass = o.pass && err <= bound;
        ++runs;
      }
    }
  }
  o.detail = std::to_string(runs) + " runs, worst error/bound " + fmt("%.3g", worst);
  return o;
}

// 9. Iterative worst-case risk over the closed form is stable across sigma.
Outcome risk_tracking() {
  Outcome o;
  auto ratios = [](const std::function<json(double)>& body_for, const std::function<double(double)>& rate) {
    std::vector<double> out;
    for (double s : kSigmaGrid) {
      json j{{"body", body_for(s)},
             {"estimator", "iterative"},
             {"mu", {{"generator", "extremes"}, {"count", 8}}},
             {"sigma", {s}},
             {"replications", 2000},
             {"seed", 909}};
      const auto rep = locmm::mc_risk(ExperimentSpec::from_json(j));
      out.push_back(rep.worst.at(0).mse / rate(s));
    }
    return out;
  };
  const auto seg = ratios([](double) { return json{{"type", "hyperrectangle"}, {"a", {2.0}}}; },
                          [](double s) { return locmm::rate_hyperrectangle(vec({2}), s); });
  const auto ell = ratios(
      [](double s) {
        const double s2 = s * s;
        return json{{"type", "ellipsoid"}, {"a", {s2, 4 * s2, 9 * s2}}};
      },
      [](double s) { return 3 * s * s; });
  for (const auto* rs : {&seg, &ell}) {
    const auto [lo, hi] = std::minmax_element(rs->begin(), rs->end());
    const double spread = *hi / *lo;
    o.pass = o.pass && std::isfinite(spread) && spread <= 10;
    o.detail += std::string(rs == &seg ? "segment" : "ellipsoid") + " ratios [";
    for (std::size_t i = 0; i < rs->size(); ++i) o.detail += (i ? ", " : "") + fmt("%.3f", (*rs)[i]);
    o.detail += "] max/min " + fmt("%.3f", spread) + "; ";
  }
  return o;
}

// 10. Unbounded estimator on the monotone cone against the LSE.
Outcome unbounded_consistency() {
  json j{{"body", {{"type", "monotone_cone"}, {"n", 2}}},
         {"estimators", {"unbounded", "lse"}},
         {"mu", {{0.0, 0.0}}},
         {"sigma", {0.05}},
         {"replications", 2000},
         {"seed", 1010}};
  const auto rep = locmm::mc_risk(ExperimentSpec::from_json(j));
  double ub = NAN, ls = NAN;
  for (const auto& c : rep.cells) (c.estimator == "unbounded" ? ub : ls) = c.mse;
  const double ratio = ub / ls;
  Outcome o;
  o.pass = std::isfinite(ratio) && ratio <= 10 && ratio >= 0.1;
  o.detail = "unbounded " + fmt("%.3g", ub) + ", lse " + fmt("%.3g", ls) + ", ratio " + fmt("%.3f", ratio);
  return o;
}

// 11. LSE at the segment boundary sits in the quadrature band.
Outcome lse_analytic_cell() {
  json j{{"body", {{"type", "hyperrectangle"}, {"a", {2.0}}}},
         {"estimator", "lse"},
         {"mu", {{1.0}}},
         {"sigma", {0.1}},
         {"replications", 10000},
         {"seed", 1111}};
  const auto rep = locmm::mc_risk(ExperimentSpec::from_json(j));
  const auto& c = rep.cells.at(0);
  Outcome o;
  o.pass = c.mse >= 0.004 && c.mse <= 0.007;
  o.detail = "mse " + fmt("%.5f", c.mse) + " +- " + fmt("%.5f", c.stderr_) + " in [0.004, 0.007]";
  return o;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 12. Two end-to-end CLI risk runs give identical bytes.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("locmm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream s(dir / "spec.json");
    s << R"({"body":{"type":"ellipsoid","a":[1,4]},"estimators":["lse","iterative","unbounded"],)"
      << R"("mu":{"generator":"extremes","count":4},"sigma":[0.05,0.5],"replications":200,"seed":1212})";
  }
  auto run = [&](const std::string& name) {
    const std::string cmd = std::string(LOCMM_CLI_PATH) + " risk --spec '" + (dir / "spec.json").string() +
                            "' --out '" + (dir / name).string() + "' > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  Outcome o;
  const int ra = run("a.json");
  const int rb = run("b.json");
  const std::string a = read_file(dir / "a.json");
  const std::string b = read_file(dir / "b.json");
  const bool csv_same = read_file(dir / "a.csv") == read_file(dir / "b.csv");
  o.pass = ra == 0 && rb == 0 && !a.empty() && a == b && csv_same;
  o.detail = "exit codes " + std::to_string(ra) + "/" + std::to_string(rb) + ", " + std::to_string(a.size()) +
             " bytes, " + (a == b && csv_same ? "identical" : "different");
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"packing-covering sandwich", packing_covering_sandwich},
      {"covering certification", covering_certification},
      {"entropy monotonicity", entropy_monotonicity},
      {"closed-form oracles", closed_form_oracles},
      {"solver vs closed form", solver_vs_oracle},
      {"two-point test bound", lemma4_bound},
      {"trajectory contraction", trajectory_contraction},
      {"noiseless recovery", noiseless_recovery},
      {"risk tracking", risk_tracking},
      {"unbounded consistency", unbounded_consistency},
      {"LSE analytic cell", lse_analytic_cell},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("criterion %2zu %-26s %s  %s [%.1fs]\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
