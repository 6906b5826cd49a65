#include "locmm/harness.hpp"

#include "locmm/json_io.hpp"
#include "locmm/parallel.hpp"
#include "locmm/rates.hpp"
#include "locmm/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace locmm {

using nlohmann::json;

namespace {

const std::set<std::string> kEstimators{"iterative", "lse", "projection", "unbounded"};

double get_number(const json& j, const char* key) {
  if (!j.is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
  return j.get<double>();
}

int get_int(const json& j, const char* key) {
  if (!j.is_number_integer()) throw ValidationError(std::string("field '") + key + "' must be an integer");
  return j.get<int>();
}

std::uint64_t get_seed(const json& j, const char* key) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  throw ValidationError(std::string("field '") + key + "' must be a non-negative integer");
}

}  // namespace

std::vector<Vector> generate_truth_points(const ConvexBody& body, const std::string& kind,
                                          int count, std::uint64_t seed) {
  if (count < 1) throw ValidationError("truth point count must be positive");
  const std::size_t limit = static_cast<std::size_t>(count);
  std::vector<Vector> out;
  auto add = [&](const Vector& v) {
    if (out.size() >= limit || !body.contains(v, 1e-9)) return;
    for (const auto& o : out)
      if (o == v) return;
    out.push_back(v);
  };
  const Vector mid = body.center();
  if (kind == "center") return {mid};
  if (kind == "extremes") add(mid);
  if (kind == "extremes" || kind == "vertices") {
    for (const auto& e : body.extreme_points()) add(e);
    if (kind == "vertices") {
      if (out.empty()) out.push_back(mid);
      return out;
    }
  } else if (kind != "random-boundary") {
    throw ValidationError("unknown truth generator '" + kind + "'");
  }
  std::mt19937_64 rng(derive_seed(seed, {0x6d75ULL}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double reach = body.bounded() ? 2.0 * body.diameter() + 1.0 : 1.0 + mid.norm();
  Vector g(body.dimension());
  for (std::size_t tries = 0; out.size() < limit && tries < 8 * limit + 8; ++tries) {
    for (Eigen::Index d = 0; d < g.size(); ++d) g[d] = gauss(rng);
    const double gn = g.norm();
    if (gn > 0) add(body.project(mid + g * (reach / gn)));
  }
  if (out.empty()) out.push_back(mid);
  return out;
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("experiment spec must be a JSON object");
  static const std::set<std::string> known{
      "body", "estimator", "estimators", "mu", "sigma", "sigmas", "replications", "R", "seed",
      "output", "c", "packing_seed", "candidate_budget", "stall_limit", "center_candidates",
      "max_depth_cap", "sigma_lower", "depth", "anchor", "unbounded_max_m", "mu_source"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ValidationError("unknown spec field '" + it.key() + "'");

  ExperimentSpec s;
  if (!j.contains("body")) throw ValidationError("spec needs a 'body'");
  s.body = ConvexBody::from_json(j.at("body"));

  if (j.contains("estimators")) {
    const auto& e = j.at("estimators");
    if (!e.is_array()) throw ValidationError("'estimators' must be an array");
    for (const auto& x : e) {
      if (!x.is_string()) throw ValidationError("estimator ids must be strings");
      s.estimators.push_back(x.get<std::string>());
    }
  }
  if (j.contains("estimator")) {
    if (!j.at("estimator").is_string()) throw ValidationError("'estimator' must be a string");
    s.estimators.push_back(j.at("estimator").get<std::string>());
  }
  if (s.estimators.empty()) s.estimators.push_back("lse");

  const json* sig = j.contains("sigma") ? &j.at("sigma") : j.contains("sigmas") ? &j.at("sigmas") : nullptr;
  if (!sig) throw ValidationError("spec needs 'sigma'");
  if (sig->is_array()) {
    for (const auto& x : *sig) s.sigmas.push_back(get_number(x, "sigma"));
  } else {
    s.sigmas.push_back(get_number(*sig, "sigma"));
  }

  if (j.contains("replications")) s.replications = get_int(j.at("replications"), "replications");
  if (j.contains("R")) s.replications = get_int(j.at("R"), "R");
  if (j.contains("seed")) s.seed = get_seed(j.at("seed"), "seed");
  if (j.contains("output")) {
    if (!j.at("output").is_string()) throw ValidationError("'output' must be a string");
    s.output = j.at("output").get<std::string>();
  }
  auto& pc = s.estimator.packing;
  if (j.contains("c")) pc.c_const = get_number(j.at("c"), "c");
  if (j.contains("packing_seed")) pc.seed = get_seed(j.at("packing_seed"), "packing_seed");
  if (j.contains("candidate_budget")) pc.candidate_budget = get_int(j.at("candidate_budget"), "candidate_budget");
  if (j.contains("stall_limit")) pc.stall_limit = get_int(j.at("stall_limit"), "stall_limit");
  if (j.contains("center_candidates")) pc.center_candidates = get_int(j.at("center_candidates"), "center_candidates");
  if (j.contains("max_depth_cap")) s.estimator.max_depth_cap = get_int(j.at("max_depth_cap"), "max_depth_cap");
  if (j.contains("unbounded_max_m")) s.estimator.unbounded_max_m = get_int(j.at("unbounded_max_m"), "unbounded_max_m");
  if (j.contains("sigma_lower") && !j.at("sigma_lower").is_null())
    s.sigma_lower = get_number(j.at("sigma_lower"), "sigma_lower");
  if (j.contains("depth") && !j.at("depth").is_null()) s.depth = get_int(j.at("depth"), "depth");
  if (j.contains("anchor") && !j.at("anchor").is_null()) s.estimator.anchor = vector_from_json(j.at("anchor"));

  const json mu = j.contains("mu") ? j.at("mu") : json{{"generator", "extremes"}, {"count", 8}};
  if (mu.is_array()) {
    for (const auto& p : mu) s.mu.push_back(vector_from_json(p));
    if (j.contains("mu_source") && j.at("mu_source").is_string()) s.mu_source = j.at("mu_source").get<std::string>();
  } else if (mu.is_object()) {
    const std::string kind = mu.value("generator", std::string("extremes"));
    const int count = mu.contains("count") ? get_int(mu.at("count"), "count") : 8;
    s.mu = generate_truth_points(*s.body, kind, count, s.seed);
    s.mu_source = kind;
  } else {
    throw ValidationError("'mu' must be a list of points or a generator object");
  }
  s.validate();
  return s;
}

json ExperimentSpec::to_json() const {
  json mus = json::array();
  for (const auto& m : mu) mus.push_back(locmm::to_json(m));
  json j;
  j["body"] = body ? body->descriptor() : json(nullptr);
  j["estimators"] = estimators;
  j["mu"] = std::move(mus);
  j["mu_source"] = mu_source;
  j["sigma"] = sigmas;
  j["replications"] = replications;
  j["seed"] = seed;
  j["c"] = estimator.packing.c_const;
  j["packing_seed"] = estimator.packing.seed;
  j["candidate_budget"] = estimator.packing.candidate_budget;
  j["stall_limit"] = estimator.packing.stall_limit;
  j["center_candidates"] = estimator.packing.center_candidates;
  j["max_depth_cap"] = estimator.max_depth_cap;
  j["unbounded_max_m"] = estimator.unbounded_max_m;
  j["sigma_lower"] = sigma_lower ? json(*sigma_lower) : json(nullptr);
  j["depth"] = depth ? json(*depth) : json(nullptr);
  j["anchor"] = estimator.anchor ? locmm::to_json(*estimator.anchor) : json(nullptr);
  return j;
}

void ExperimentSpec::validate() const {
  if (!body) throw ValidationError("spec needs a body");
  estimator.validate();
  if (replications < 1) throw ValidationError("replications must be at least 1");
  if (sigmas.empty()) throw ValidationError("sigma grid is empty");
  for (double s : sigmas)
    if (!(s >= 0) || !std::isfinite(s)) throw ValidationError("sigma must be finite and non-negative");
  if (sigma_lower && (!(*sigma_lower >= 0) || !std::isfinite(*sigma_lower)))
    throw ValidationError("sigma_lower must be finite and non-negative");
  if (depth && *depth < 1) throw ValidationError("depth must be at least 1");
  if (mu.empty()) throw ValidationError("no truth points");
  for (const auto& m : mu) {
    if (m.size() != body->dimension()) throw ValidationError("truth point has the wrong dimension");
    if (!body->contains(m, 1e-6)) throw ValidationError("truth point is not a member of the body");
  }
  if (estimators.empty()) throw ValidationError("no estimator given");
  for (const auto& e : estimators) {
    if (!kEstimators.count(e)) throw ValidationError("unknown estimator '" + e + "'");
    if (e == "iterative" && !body->bounded())
      throw ValidationError("the iterative estimator needs a bounded body; use 'unbounded'");
    if (e == "projection") {
      if (body->kind() != BodyKind::Ellipsoid) throw ValidationError("'projection' needs an ellipsoid");
      const Vector a = body->parameters();
      for (Eigen::Index i = 1; i < a.size(); ++i)
        if (a[i] < a[i - 1]) throw ValidationError("'projection' needs ascending semi-axes");
    }
  }
}

std::optional<double> closed_form_rate(const ConvexBody& body, double sigma) {
  if (body.kind() != BodyKind::Hyperrectangle && body.kind() != BodyKind::Ellipsoid) return std::nullopt;
  Vector a = body.parameters();
  std::sort(a.data(), a.data() + a.size());
  return body.kind() == BodyKind::Hyperrectangle ? rate_hyperrectangle(a, sigma) : rate_ellipse(a, sigma);
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t mu_id, std::size_t sigma_id) {
  return derive_seed(master, {mu_id, sigma_id});
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t mu_id, std::size_t sigma_id, int r) {
  return derive_seed(cell_seed(master, mu_id, sigma_id), {static_cast<std::uint64_t>(r)});
}

RiskReport mc_risk(const ExperimentSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  const ConvexBody& body = *spec.body;
  const std::size_t n_mu = spec.mu.size();
  const std::size_t n_sigma = spec.sigmas.size();
  const std::size_t n_est = spec.estimators.size();
  const std::size_t R = static_cast<std::size_t>(spec.replications);

  // Per-sigma depth of the iterative estimator, fixed before any data is drawn.
  std::vector<int> depth(n_sigma, 0);
  std::vector<std::vector<std::string>> depth_warnings(n_sigma);
  const bool wants_iterative =
      std::find(spec.estimators.begin(), spec.estimators.end(), "iterative") != spec.estimators.end();
  if (wants_iterative) {
    for (std::size_t s = 0; s < n_sigma; ++s) {
      if (spec.depth) {
        depth[s] = *spec.depth;
        continue;
      }
      const double lower = spec.sigma_lower ? *spec.sigma_lower : spec.sigmas[s];
      const DepthBound db = depth_bound(body, lower, spec.estimator);
      depth[s] = db.depth;
      if (db.sigma_unknown)
        depth_warnings[s].push_back("sigma_lower is 0; depth set to max_depth_cap");
      else if (db.cap_binding)
        depth_warnings[s].push_back("depth bound reached max_depth_cap");
    }
  }

  const std::size_t n_tasks = n_mu * n_sigma * R;
  std::vector<double> err(n_tasks * n_est, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n_tasks, [&](std::size_t task) {
    const std::size_t r = task % R;
    const std::size_t s = (task / R) % n_sigma;
    const std::size_t m = task / (R * n_sigma);
    const double sigma = spec.sigmas[s];
    const std::uint64_t seed = replicate_seed(spec.seed, m, s, static_cast<int>(r));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Vector& mu = spec.mu[m];
    Vector y(mu.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = mu[i] + sigma * gauss(rng);
    for (std::size_t e = 0; e < n_est; ++e) {
      const std::string& id = spec.estimators[e];
      try {
        Vector est;
        if (id == "lse") {
          est = lse(body, y);
        } else if (id == "projection") {
          est = projection_estimate(body, y, sigma);
        } else if (id == "iterative") {
          est = iterative_estimate(body, y, depth[s], spec.estimator).final_point;
        } else {
          EstimatorConfig cfg = spec.estimator;
          cfg.eta_seed = derive_seed(seed, {0x657461ULL});
          est = unbounded_estimate(body, y, sigma, cfg).final_point;
        }
        err[task * n_est + e] = (est - mu).squaredNorm();
      } catch (const std::exception&) {
        // Counted as a failure for this replicate.
      }
    }
  });

  RiskReport rep;
  rep.spec = spec.to_json();
  for (std::size_t m = 0; m < n_mu; ++m)
    for (std::size_t s = 0; s < n_sigma; ++s)
      for (std::size_t e = 0; e < n_est; ++e) {
        RiskCell c;
        c.mu_id = m;
        c.mu = spec.mu[m];
        c.sigma_id = s;
        c.sigma = spec.sigmas[s];
        c.estimator = spec.estimators[e];
        c.replications = spec.replications;
        c.seed = cell_seed(spec.seed, m, s);
        if (c.estimator == "iterative") {
          c.depth = depth[s];
          c.warnings = depth_warnings[s];
        }
        double sum = 0;
        double sumsq = 0;
        int ok = 0;
        for (std::size_t r = 0; r < R; ++r) {
          const double v = err[((m * n_sigma + s) * R + r) * n_est + e];
          if (std::isnan(v)) {
            ++c.failures;
            continue;
          }
          sum += v;
          ++ok;
        }
        if (ok > 0) {
          c.mse = sum / ok;
          for (std::size_t r = 0; r < R; ++r) {
            const double v = err[((m * n_sigma + s) * R + r) * n_est + e];
            if (!std::isnan(v)) sumsq += (v - c.mse) * (v - c.mse);
          }
          c.stderr_ = ok > 1 ? std::sqrt(sumsq / (ok - 1)) / std::sqrt(static_cast<double>(ok)) : 0.0;
        } else {
          c.mse = std::numeric_limits<double>::quiet_NaN();
          c.stderr_ = std::numeric_limits<double>::quiet_NaN();
        }
        c.valid = ok > 0 && c.failures <= 0.01 * spec.replications;
        rep.cells.push_back(std::move(c));
      }

  for (std::size_t s = 0; s < n_sigma; ++s)
    for (std::size_t e = 0; e < n_est; ++e) {
      WorstRow w;
      w.sigma = spec.sigmas[s];
      w.estimator = spec.estimators[e];
      w.mse = -1;
      for (std::size_t m = 0; m < n_mu; ++m) {
        const RiskCell& c = rep.cells[(m * n_sigma + s) * n_est + e];
        w.valid = w.valid && c.valid;
        if (!std::isnan(c.mse) && c.mse > w.mse) {
          w.mse = c.mse;
          w.stderr_ = c.stderr_;
          w.mu_id = c.mu_id;
        }
      }
      if (w.mse < 0) w.mse = std::numeric_limits<double>::quiet_NaN();
      w.closed_form_rate = closed_form_rate(body, w.sigma);
      rep.worst.push_back(std::move(w));
    }
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

RiskReport compare_estimators(const ExperimentSpec& spec) {
  if (spec.estimators.size() < 2) throw ValidationError("compare needs at least two estimators");
  RiskReport rep = mc_risk(spec);
  const std::size_t n_est = spec.estimators.size();
  for (std::size_t base = 0; base < rep.cells.size(); base += n_est) {
    const RiskCell& den = rep.cells[base];
    for (std::size_t e = 1; e < n_est; ++e) {
      const RiskCell& num = rep.cells[base + e];
      RiskRatio r;
      r.mu_id = num.mu_id;
      r.sigma = num.sigma;
      r.numerator = num.estimator;
      r.denominator = den.estimator;
      r.ratio = num.mse == den.mse ? 1.0 : num.mse / den.mse;
      rep.ratios.push_back(r);
    }
  }
  return rep;
}

json RiskReport::to_json() const {
  json cs = json::array();
  for (const auto& c : cells) {
    json j{{"mu_id", c.mu_id},       {"mu", locmm::to_json(c.mu)}, {"sigma", c.sigma},
           {"estimator", c.estimator}, {"mse", c.mse},             {"stderr", c.stderr_},
           {"R", c.replications},     {"failures", c.failures},     {"valid", c.valid},
           {"seed", c.seed}};
    if (c.estimator == "iterative") {
      j["depth"] = c.depth;
      j["warnings"] = c.warnings;
    }
    cs.push_back(std::move(j));
  }
  json ws = json::array();
  for (const auto& w : worst) {
    json j{{"sigma", w.sigma}, {"estimator", w.estimator}, {"mse", w.mse},
           {"stderr", w.stderr_}, {"mu_id", w.mu_id}, {"valid", w.valid}};
    if (w.closed_form_rate) {
      j["closed_form_rate"] = *w.closed_form_rate;
      j["ratio_to_closed_form"] = *w.closed_form_rate > 0 ? json(w.mse / *w.closed_form_rate) : json(nullptr);
    } else {
      j["closed_form_rate"] = nullptr;
    }
    ws.push_back(std::move(j));
  }
  json out{{"schema", "locmm-risk-report/1"}, {"spec", spec}, {"cells", std::move(cs)},
           {"worst_over_listed_mu", std::move(ws)}};
  if (!ratios.empty()) {
    json rs = json::array();
    for (const auto& r : ratios)
      rs.push_back({{"mu_id", r.mu_id}, {"sigma", r.sigma}, {"numerator", r.numerator},
                    {"denominator", r.denominator}, {"ratio", r.ratio}});
    out["ratios"] = std::move(rs);
  }
  return out;
}

std::string RiskReport::to_csv() const {
  std::ostringstream out;
  out << "mu_id,sigma,estimator,mse,stderr,R,seed\n";
  for (const auto& c : cells)
    out << c.mu_id << ',' << format_double(c.sigma) << ',' << c.estimator << ','
        << format_double(c.mse) << ',' << format_double(c.stderr_) << ',' << c.replications << ','
        << c.seed << '\n';
  return out.str();
}

Lemma4Result lemma4_error_experiment(double C, double delta, double sigma, int R,
                                     std::uint64_t seed, int n) {
  if (!(C > 2) || !std::isfinite(C)) throw ValidationError("C must exceed 2");
  if (!(delta > 0) || !std::isfinite(delta)) throw ValidationError("delta must be positive");
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw ValidationError("sigma must be non-negative");
  if (R < 1) throw ValidationError("R must be at least 1");
  if (n < 1) throw ValidationError("dimension must be positive");
  Lemma4Result out;
  out.C = C;
  out.delta = delta;
  out.sigma = sigma;
  out.replications = R;
  out.bound = std::exp(-(C - 2) * (C - 2) * delta * delta / (8 * sigma * sigma));
  const Vector nu1 = Vector::Zero(n);
  Vector nu2 = Vector::Zero(n);
  nu2[0] = C * delta;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  long hits = 0;
  Vector dir(n);
  Vector y(n);
  for (int r = 0; r < R; ++r) {
    double dn = 0;
    while (dn == 0) {
      for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
      dn = dir.norm();
    }
    const Vector mu = dir * (delta * std::pow(unif(rng), 1.0 / n) / dn);
    for (int i = 0; i < n; ++i) y[i] = mu[i] + sigma * gauss(rng);
    hits += two_point_test(y, nu1, nu2);
  }
  out.empirical_rate = static_cast<double>(hits) / R;
  out.stderr_ = std::sqrt(out.empirical_rate * (1 - out.empirical_rate) / R);
  out.within_bound = out.empirical_rate <= out.bound + 3 * out.stderr_;
  return out;
}

json to_json(const Lemma4Result& r) {
  return {{"C", r.C},
          {"delta", r.delta},
          {"sigma", r.sigma},
          {"R", r.replications},
          {"empirical_rate", r.empirical_rate},
          {"stderr", r.stderr_},
          {"bound", r.bound},
          {"within_bound", r.within_bound}};
}

}  // namespace locmm
