#include "locmm/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace locmm {

using nlohmann::json;

std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  if (x == 0) return std::signbit(x) ? "-0.0" : "0.0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // Keep the value recognisable as a float when %g drops the point.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

void write(std::ostringstream& out, const json& j, int indent, int level) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (level + 1)), ' ') : "";
  const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * level), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ',' << nl;
        first = false;
        out << pad << json(it.key()).dump() << sep;
        write(out, it.value(), indent, level + 1);
      }
      out << nl << close_pad << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      out << '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out << (flat && indent > 0 ? ", " : ",");
        if (!flat) out << nl << pad;
        first = false;
        write(out, v, indent, level + 1);
      }
      if (!flat) out << nl << close_pad;
      out << ']';
      return;
    }
    case json::value_t::number_float:
      out << format_double(j.get<double>());
      return;
    default:
      out << j.dump();
      return;
  }
}

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::ostringstream out;
  write(out, j, indent, 0);
  return out.str();
}

json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError("expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

std::vector<Vector> parse_vectors_csv(const std::string& text) {
  std::vector<Vector> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t' || ch == '\r') ch = ' ';
    std::istringstream fields(line);
    std::vector<double> vals;
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      double x = 0;
      try {
        x = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ValidationError("not a number in CSV: " + tok);
      vals.push_back(x);
    }
    if (vals.empty()) continue;
    if (!out.empty() && static_cast<std::size_t>(out.front().size()) != vals.size())
      throw ValidationError("CSV rows differ in length");
    out.push_back(Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return out;
}

json to_json(const PackingSet& ps) {
  json pts = json::array();
  for (const auto& p : ps.points) pts.push_back(to_json(p));
  json j;
  j["center"] = to_json(ps.center);
  j["radius"] = ps.radius;
  j["separation"] = ps.separation;
  j["cardinality"] = ps.size();
  j["points"] = std::move(pts);
  j["certified_cover_fraction"] = ps.certified_cover_fraction < 0 ? json(nullptr) : json(ps.certified_cover_fraction);
  j["method"] = ps.method();
  j["candidates_drawn"] = ps.candidates_drawn;
  j["projection_failures"] = ps.projection_failures;
  return j;
}

json to_json(const EntropyEstimate& e) {
  json per = json::array();
  for (const auto& [c, n] : e.per_center_counts) per.push_back({{"center", to_json(c)}, {"count", n}});
  json j;
  j["epsilon"] = e.epsilon;
  j["log_count"] = e.log_count;
  j["count"] = e.count();
  j["per_center_counts"] = std::move(per);
  j["method"] = e.method;
  return j;
}

json to_json(const DepthBound& db) {
  json trace = json::array();
  for (const auto& r : db.trace)
    trace.push_back({{"J", r.J}, {"epsilon_J", r.epsilon_J}, {"lhs", r.lhs}, {"rhs", r.rhs}});
  return {{"depth", db.depth},
          {"cap_binding", db.cap_binding},
          {"sigma_unknown", db.sigma_unknown},
          {"trace", std::move(trace)}};
}

json to_json(const EstimateTrajectory& t) {
  json levels = json::array();
  for (const auto& lv : t.levels)
    levels.push_back({{"level", lv.level},
                      {"center", to_json(lv.center)},
                      {"radius", lv.radius},
                      {"separation", lv.separation},
                      {"chosen", to_json(lv.chosen)},
                      {"cardinality", lv.cardinality}});
  json ups = json::array();
  for (const auto& u : t.upsilon) ups.push_back(to_json(u));
  json j;
  j["diameter"] = t.diameter;
  j["depth"] = t.depth;
  j["depth_cap_binding"] = t.depth_cap_binding;
  j["levels"] = std::move(levels);
  j["upsilon"] = std::move(ups);
  j["final_point"] = to_json(t.final_point);
  j["warnings"] = t.warnings;
  if (t.split) {
    j["split"] = {{"y1", to_json(t.split->y1)}, {"y2", to_json(t.split->y2)}, {"eta_seed", t.split->eta_seed}};
    json runs = json::array();
    for (const auto& r : t.bounded_runs)
      runs.push_back({{"m", r.m}, {"radius", r.radius}, {"depth", r.depth}, {"estimate", to_json(r.estimate)}});
    j["bounded_runs"] = std::move(runs);
  }
  return j;
}

json to_json(const RateResult& r) {
  json trace = json::array();
  for (const auto& [eps, lc] : r.entropy_trace) trace.push_back({{"epsilon", eps}, {"log_count", lc}});
  return {{"epsilon_star", r.epsilon_star}, {"rate_sq", r.rate_sq}, {"method", r.method}, {"entropy_trace", std::move(trace)}};
}

json to_json(const FanoBound& f) {
  return {{"separation", f.separation}, {"m", f.m}, {"info_bound", f.info_bound}, {"lower_bound", f.lower_bound}};
}

}  // namespace locmm
