/* C interface to the locmm library. Every call returning char* hands
 * ownership to the caller; release it with locmm_string_free. On failure a
 * status code is returned and locmm_last_error() describes it (per thread). */
#ifndef LOCMM_LOCMM_H
#define LOCMM_LOCMM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LOCMM_BUILDING_LIBRARY)
#    define LOCMM_API __declspec(dllexport)
#  else
#    define LOCMM_API __declspec(dllimport)
#  endif
#else
#  define LOCMM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum locmm_status {
  LOCMM_OK = 0,
  LOCMM_ERR_VALIDATION = 2,
  LOCMM_ERR_NUMERICAL = 3,
  LOCMM_ERR_INTERNAL = 4
} locmm_status;

typedef struct locmm_body locmm_body;

LOCMM_API const char* locmm_version(void);
LOCMM_API const char* locmm_last_error(void);
LOCMM_API void locmm_string_free(char* s);

/* Bodies */
LOCMM_API locmm_status locmm_body_from_json(const char* descriptor, locmm_body** out);
LOCMM_API void locmm_body_free(locmm_body* body);
LOCMM_API locmm_status locmm_body_dimension(const locmm_body* body, size_t* out);
/* Infinity for unbounded bodies. */
LOCMM_API locmm_status locmm_body_diameter(const locmm_body* body, double* out);
/* out receives dimension() values. */
LOCMM_API locmm_status locmm_body_center(const locmm_body* body, double* out);
LOCMM_API locmm_status locmm_body_contains(const locmm_body* body, const double* x, size_t n,
                                           double tol, int* out);
LOCMM_API locmm_status locmm_body_project(const locmm_body* body, const double* x, size_t n,
                                          double* out);
LOCMM_API locmm_status locmm_body_project_localized(const locmm_body* body, const double* center,
                                                    double radius, const double* x, size_t n,
                                                    double* out);
LOCMM_API locmm_status locmm_body_descriptor(const locmm_body* body, char** json_out);
LOCMM_API locmm_status locmm_weak_lp_norm(const double* x, size_t n, double p, double* out);

/* JSON-returning operations. options_json may be NULL; it accepts
 * c, seed, candidate_budget, stall_limit, center_candidates. */
LOCMM_API locmm_status locmm_pack(const locmm_body* body, const double* center, size_t n,
                                  double radius, double separation, int certify_probes,
                                  const char* options_json, char** json_out);
LOCMM_API locmm_status locmm_entropy(const locmm_body* body, double epsilon, int global,
                                     const char* options_json, char** json_out);
/* method: "iterative" (depth <= 0 derives it from sigma_lower), "unbounded",
 * "lse" or "projection". */
LOCMM_API locmm_status locmm_estimate(const locmm_body* body, const double* y, size_t n,
                                      const char* method, double sigma, double sigma_lower,
                                      int depth, const char* options_json, char** json_out);
LOCMM_API locmm_status locmm_epsilon_star(const locmm_body* body, double sigma,
                                          const char* options_json, char** json_out);
/* Closed-form rate for hyperrectangle and ellipsoid bodies. */
LOCMM_API locmm_status locmm_rate_closed_form(const locmm_body* body, double sigma, double* out);
/* Runs an experiment spec; csv_out may be NULL. compare != 0 adds ratios. */
LOCMM_API locmm_status locmm_risk(const char* spec_json, uint64_t seed_override,
                                  int use_seed_override, int compare, char** report_json_out,
                                  char** csv_out);
LOCMM_API locmm_status locmm_lemma4(double C, double delta, double sigma, int replications,
                                    uint64_t seed, char** json_out);

#ifdef __cplusplus
}
#endif

#endif
