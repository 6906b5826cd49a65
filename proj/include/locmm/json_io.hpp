#pragma once

#include "locmm/estimators.hpp"
#include "locmm/rates.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace locmm {

// Serializes with every floating value printed to 17 significant digits.
// Non-finite values become null. Object keys keep nlohmann's sorted order.
std::string dump_json(const nlohmann::json& j, int indent = 2);
std::string format_double(double x);

nlohmann::json to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

// One vector per non-empty line, comma or whitespace separated.
std::vector<Vector> parse_vectors_csv(const std::string& text);

nlohmann::json to_json(const PackingSet& ps);
nlohmann::json to_json(const EntropyEstimate& e);
nlohmann::json to_json(const DepthBound& db);
nlohmann::json to_json(const EstimateTrajectory& t);
nlohmann::json to_json(const RateResult& r);
nlohmann::json to_json(const FanoBound& f);

}  // namespace locmm
