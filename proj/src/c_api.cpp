#include "locmm/locmm.h"

#include "locmm/harness.hpp"
#include "locmm/json_io.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct locmm_body {
  locmm::ConvexBody body;
};

namespace {

thread_local std::string g_last_error;

template <class F>
locmm_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LOCMM_OK;
  } catch (const locmm::ValidationError& e) {
    g_last_error = e.what();
    return LOCMM_ERR_VALIDATION;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return LOCMM_ERR_VALIDATION;
  } catch (const locmm::NumericalError& e) {
    g_last_error = e.what();
    return LOCMM_ERR_NUMERICAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LOCMM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LOCMM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw locmm::ValidationError(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

locmm::Vector copy_vector(const double* x, std::size_t n, std::size_t expected) {
  need(x, "vector");
  if (n != expected) throw locmm::ValidationError("vector length does not match the body dimension");
  return Eigen::Map<const locmm::Vector>(x, static_cast<Eigen::Index>(n));
}

nlohmann::json parse_options(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  auto j = nlohmann::json::parse(text);
  if (!j.is_object()) throw locmm::ValidationError("options must be a JSON object");
  return j;
}

locmm::PackingConfig packing_options(const nlohmann::json& o) {
  locmm::PackingConfig cfg;
  for (auto it = o.begin(); it != o.end(); ++it) {
    const std::string& k = it.key();
    if (k == "c") cfg.c_const = it->get<double>();
    else if (k == "seed") cfg.seed = it->get<std::uint64_t>();
    else if (k == "candidate_budget") cfg.candidate_budget = it->get<int>();
    else if (k == "stall_limit") cfg.stall_limit = it->get<int>();
    else if (k == "center_candidates") cfg.center_candidates = it->get<int>();
    else if (k != "max_depth_cap" && k != "eta_seed" && k != "anchor" && k != "unbounded_max_m")
      throw locmm::ValidationError("unknown option '" + k + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

extern "C" {

const char* locmm_version(void) { return "0.1.0"; }

const char* locmm_last_error(void) { return g_last_error.c_str(); }

void locmm_string_free(char* s) { std::free(s); }

locmm_status locmm_body_from_json(const char* descriptor, locmm_body** out) {
  return guarded([&] {
    need(descriptor, "descriptor");
    need(out, "out");
    *out = nullptr;
    *out = new locmm_body{locmm::ConvexBody::from_json_text(descriptor)};
  });
}

void locmm_body_free(locmm_body* body) { delete body; }

locmm_status locmm_body_dimension(const locmm_body* body, size_t* out) {
  return guarded([&] {
    need(body, "body");
    need(out, "out");
    *out = static_cast<size_t>(body->body.dimension());
  });
}

locmm_status locmm_body_diameter(const locmm_body* body, double* out) {
  return guarded([&] {
    need(body, "body");
    need(out, "out");
    *out = body->body.diameter();
  });
}

locmm_status locmm_body_center(const locmm_body* body, double* out) {
  return guarded([&] {
    need(body, "body");
    need(out, "out");
    const auto c = body->body.center();
    std::memcpy(out, c.data(), static_cast<std::size_t>(c.size()) * sizeof(double));
  });
}

locmm_status locmm_body_contains(const locmm_body* body, const double* x, size_t n, double tol,
                                 int* out) {
  return guarded([&] {
    need(body, "body");
    need(out, "out");
    const auto v = copy_vector(x, n, static_cast<size_t>(body->body.dimension()));
    *out = body->body.contains(v, tol) ? 1 : 0;
  });
}

locmm_status locmm_body_project(const locmm_body* body, const double* x, size_t n, double* out) {
  return guarded([&] {
    need(body, "body");
    need(out, "out");
    const auto p = body->body.project(copy_vector(x, n, static_cast<size_t>(body->body.dimension())));
    std::memcpy(out, p.data(), n * sizeof(double));
  });
}

locmm_status locmm_body_project_localized(const locmm_body* body, const double* center,
                                          double radius, const double* x, size_t n, double* out) {
  return guarded([&] {
    need(body, "body");
    need(out, "out");
    const size_t dim = static_cast<size_t>(body->body.dimension());
    const auto p = locmm::project_localized(body->body, copy_vector(center, n, dim), radius,
                                            copy_vector(x, n, dim));
    std::memcpy(out, p.data(), n * sizeof(double));
  });
}

locmm_status locmm_body_descriptor(const locmm_body* body, char** json_out) {
  return guarded([&] {
    need(body, "body");
    need(json_out, "json_out");
    *json_out = dup_string(locmm::dump_json(body->body.descriptor()));
  });
}

locmm_status locmm_weak_lp_norm(const double* x, size_t n, double p, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = locmm::weak_lp_norm(copy_vector(x, n, n), p);
  });
}

locmm_status locmm_pack(const locmm_body* body, const double* center, size_t n, double radius,
                        double separation, int certify_probes, const char* options_json,
                        char** json_out) {
  return guarded([&] {
    need(body, "body");
    need(json_out, "json_out");
    const auto cfg = packing_options(parse_options(options_json));
    const auto c = copy_vector(center, n, static_cast<size_t>(body->body.dimension()));
    auto ps = locmm::greedy_packing(body->body, c, radius, separation, cfg);
    if (certify_probes > 0)
      ps.certified_cover_fraction = locmm::certify_covering(body->body, ps, certify_probes, cfg.seed);
    auto j = locmm::to_json(ps);
    j["verified"] = locmm::verify_packing(body->body, ps);
    *json_out = dup_string(locmm::dump_json(j));
  });
}

locmm_status locmm_entropy(const locmm_body* body, double epsilon, int global,
                           const char* options_json, char** json_out) {
  return guarded([&] {
    need(body, "body");
    need(json_out, "json_out");
    const auto cfg = packing_options(parse_options(options_json));
    const auto e = global ? locmm::global_entropy(body->body, epsilon, cfg)
                          : locmm::local_entropy(body->body, epsilon, cfg);
    auto j = locmm::to_json(e);
    j["kind"] = global ? "global" : "local";
    j["c"] = cfg.c_const;
    *json_out = dup_string(locmm::dump_json(j));
  });
}

locmm_status locmm_estimate(const locmm_body* body, const double* y, size_t n, const char* method,
                            double sigma, double sigma_lower, int depth, const char* options_json,
                            char** json_out) {
  return guarded([&] {
    need(body, "body");
    need(json_out, "json_out");
    const std::string m = method ? method : "iterative";
    const auto opts = parse_options(options_json);
    locmm::EstimatorConfig cfg;
    cfg.packing = packing_options(opts);
    if (opts.contains("max_depth_cap")) cfg.max_depth_cap = opts.at("max_depth_cap").get<int>();
    if (opts.contains("unbounded_max_m")) cfg.unbounded_max_m = opts.at("unbounded_max_m").get<int>();
    if (opts.contains("eta_seed")) cfg.eta_seed = opts.at("eta_seed").get<std::uint64_t>();
    if (opts.contains("anchor")) cfg.anchor = locmm::vector_from_json(opts.at("anchor"));
    cfg.sigma_lower = sigma_lower;
    const auto v = copy_vector(y, n, static_cast<size_t>(body->body.dimension()));
    nlohmann::json j;
    if (m == "iterative") {
      locmm::EstimateTrajectory t;
      if (depth > 0) {
        t = locmm::iterative_estimate(body->body, v, depth, cfg);
      } else {
        const auto db = locmm::depth_bound(body->body, sigma_lower, cfg);
        t = locmm::iterative_estimate(body->body, v, db.depth, cfg);
        t.depth_cap_binding = db.cap_binding;
        if (db.sigma_unknown) t.warnings.push_back("sigma_lower unknown; depth set to max_depth_cap");
        j["depth_bound"] = locmm::to_json(db);
      }
      j.update(locmm::to_json(t));
      j["contracts"] = locmm::trajectory_contracts(t);
    } else if (m == "unbounded") {
      const auto t = locmm::unbounded_estimate(body->body, v, sigma, cfg);
      j = locmm::to_json(t);
      j["contracts"] = locmm::trajectory_contracts(t);
    } else if (m == "lse") {
      j["final_point"] = locmm::to_json(locmm::lse(body->body, v));
    } else if (m == "projection") {
      j["final_point"] = locmm::to_json(locmm::projection_estimate(body->body, v, sigma));
    } else {
      throw locmm::ValidationError("unknown estimator '" + m + "'");
    }
    j["estimator"] = m;
    *json_out = dup_string(locmm::dump_json(j));
  });
}

locmm_status locmm_epsilon_star(const locmm_body* body, double sigma, const char* options_json,
                                char** json_out) {
  return guarded([&] {
    need(body, "body");
    need(json_out, "json_out");
    locmm::RateConfig cfg;
    cfg.packing = packing_options(parse_options(options_json));
    const auto r = locmm::epsilon_star(body->body, sigma, cfg);
    auto j = locmm::to_json(r);
    j["sigma"] = sigma;
    j["c"] = cfg.packing.c_const;
    *json_out = dup_string(locmm::dump_json(j));
  });
}

locmm_status locmm_rate_closed_form(const locmm_body* body, double sigma, double* out) {
  return guarded([&] {
    need(body, "body");
    need(out, "out");
    const auto r = locmm::closed_form_rate(body->body, sigma);
    if (!r) throw locmm::ValidationError("no closed-form rate for this body type");
    *out = *r;
  });
}

locmm_status locmm_risk(const char* spec_json, uint64_t seed_override, int use_seed_override,
                        int compare, char** report_json_out, char** csv_out) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(report_json_out, "report_json_out");
    auto j = nlohmann::json::parse(spec_json);
    if (use_seed_override && j.is_object()) j["seed"] = seed_override;
    const auto spec = locmm::ExperimentSpec::from_json(j);
    const auto rep = compare ? locmm::compare_estimators(spec) : locmm::mc_risk(spec);
    std::string report = locmm::dump_json(rep.to_json());
    std::string csv = rep.to_csv();
    *report_json_out = dup_string(report);
    if (csv_out) *csv_out = dup_string(csv);
  });
}

locmm_status locmm_lemma4(double C, double delta, double sigma, int replications, uint64_t seed,
                          char** json_out) {
  return guarded([&] {
    need(json_out, "json_out");
    const auto r = locmm::lemma4_error_experiment(C, delta, sigma, replications, seed);
    *json_out = dup_string(locmm::dump_json(locmm::to_json(r)));
  });
}

}  // extern "C"
