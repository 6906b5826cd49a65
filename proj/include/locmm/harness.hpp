#pragma once

#include "locmm/estimators.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace locmm {

struct ExperimentSpec {
  std::optional<ConvexBody> body;
  std::vector<std::string> estimators;  // iterative | lse | projection | unbounded
  std::vector<Vector> mu;
  std::string mu_source = "explicit";
  std::vector<double> sigmas;
  int replications = 2000;
  std::uint64_t seed = 0;
  std::string output;
  EstimatorConfig estimator;              // packing config, caps, anchor
  std::optional<double> sigma_lower;      // defaults to the cell's sigma
  std::optional<int> depth;               // fixed depth for the iterative estimator

  // Accepts "estimator" or "estimators"; "mu" is a list of points or
  // {"generator": "extremes" | "vertices" | "center" | "random-boundary", "count": k}.
  static ExperimentSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

// Truth points: center, extreme points, then seeded boundary points, `count` in total.
std::vector<Vector> generate_truth_points(const ConvexBody& body, const std::string& kind,
                                          int count, std::uint64_t seed);

struct RiskCell {
  std::size_t mu_id = 0;
  Vector mu;
  std::size_t sigma_id = 0;
  double sigma = 0;
  std::string estimator;
  double mse = 0;
  double stderr_ = 0;
  int replications = 0;
  int failures = 0;
  bool valid = true;
  std::uint64_t seed = 0;
  int depth = 0;  // iterative only
  std::vector<std::string> warnings;
};

struct WorstRow {
  double sigma = 0;
  std::string estimator;
  double mse = 0;
  double stderr_ = 0;
  std::size_t mu_id = 0;
  std::optional<double> closed_form_rate;
  bool valid = true;
};

struct RiskRatio {
  std::size_t mu_id = 0;
  double sigma = 0;
  std::string numerator;
  std::string denominator;
  double ratio = 0;
};

struct RiskReport {
  nlohmann::json spec;
  std::vector<RiskCell> cells;  // ordered by (mu, sigma, estimator)
  std::vector<WorstRow> worst;  // max over listed mu per (sigma, estimator)
  std::vector<RiskRatio> ratios;
  double runtime_seconds = 0;   // kept out of the serialized report

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Closed-form rate for hyperrectangles and ellipsoids, if known.
std::optional<double> closed_form_rate(const ConvexBody& body, double sigma);

std::uint64_t replicate_seed(std::uint64_t master, std::size_t mu_id, std::size_t sigma_id, int r);
std::uint64_t cell_seed(std::uint64_t master, std::size_t mu_id, std::size_t sigma_id);

RiskReport mc_risk(const ExperimentSpec& spec);
// Requires at least two estimators; adds pairwise ratios against the first.
RiskReport compare_estimators(const ExperimentSpec& spec);

struct Lemma4Result {
  double C = 0;
  double delta = 0;
  double sigma = 0;
  int replications = 0;
  double empirical_rate = 0;
  double stderr_ = 0;
  double bound = 0;
  bool within_bound = false;  // empirical <= bound + 3 stderr
};

// mu uniform on the delta-ball around nu1 = 0, nu2 = C delta e1, in dimension n.
Lemma4Result lemma4_error_experiment(double C, double delta, double sigma, int R,
                                     std::uint64_t seed, int n = 2);

nlohmann::json to_json(const Lemma4Result& r);

}  // namespace locmm
