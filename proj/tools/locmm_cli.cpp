// Command-line front end over the C API.
#include "locmm/locmm.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInternal = 4;

struct CliError {
  int code;
  std::string message;
};

int exit_code(locmm_status s) {
  switch (s) {
    case LOCMM_OK:
      return 0;
    case LOCMM_ERR_VALIDATION:
      return kExitValidation;
    case LOCMM_ERR_NUMERICAL:
      return kExitNumerical;
    default:
      return kExitInternal;
  }
}

void check(locmm_status s) {
  if (s != LOCMM_OK) throw CliError{exit_code(s), locmm_last_error()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitValidation, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A file path, or the literal content when no such file exists.
std::string file_or_inline(const std::string& arg) {
  std::ifstream probe(arg);
  return probe ? slurp(arg) : arg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kExitValidation, "cannot write " + path};
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { locmm_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Body {
  locmm_body* b = nullptr;
  explicit Body(const std::string& arg) { check(locmm_body_from_json(file_or_inline(arg).c_str(), &b)); }
  ~Body() { locmm_body_free(b); }
  Body(const Body&) = delete;
  Body& operator=(const Body&) = delete;
  std::size_t dim() const {
    std::size_t n = 0;
    check(locmm_body_dimension(b, &n));
    return n;
  }
};

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::string clean = text;
  for (char& ch : clean)
    if (ch == ',' || ch == ';' || ch == '\t' || ch == '\r' || ch == '\n' || ch == '[' || ch == ']') ch = ' ';
  std::istringstream in(clean);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(tok, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw CliError{kExitValidation, "not a number: " + tok};
  }
  return out;
}

// First non-comment row of a CSV file (or an inline list).
std::vector<double> read_vector(const std::string& arg) {
  std::istringstream lines(file_or_inline(arg));
  std::string line;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto v = parse_numbers(line);
    if (!v.empty()) return v;
  }
  throw CliError{kExitValidation, "no vector found in " + arg};
}

std::string options_json(std::optional<double> c, std::optional<std::uint64_t> seed) {
  nlohmann::json o = nlohmann::json::object();
  if (c) o["c"] = *c;
  if (seed) o["seed"] = *seed;
  return o.dump();
}

// JSON goes to --out when given (summary on stdout), else to stdout (summary on stderr).
void emit(const std::string& json_text, const std::string& out, const std::string& summary) {
  if (!out.empty()) {
    write_file(out, json_text);
    std::cout << summary << '\n';
  } else {
    std::cout << json_text << '\n';
    std::cerr << summary << '\n';
  }
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string csv_path_for(const std::string& json_path) {
  const auto dot = json_path.rfind('.');
  const auto slash = json_path.rfind('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    return json_path.substr(0, dot) + ".csv";
  return json_path + ".csv";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local-entropy minimax toolkit"};
  app.require_subcommand(1);

  std::string body_arg, out_path, csv_path, spec_arg, y_arg, center_arg, method = "iterative";
  std::optional<double> c_const, sigma_lower, epsilon, radius, separation;
  std::optional<std::uint64_t> seed;
  double sigma = -1, C = 6, delta = 1;
  int depth = 0, probes = 0, reps = 10000;
  bool closed_form = false, global = false;
  std::string epsilons_arg;

  auto* rate = app.add_subcommand("rate", "minimax rate from local entropy");
  rate->add_option("--body", body_arg, "body descriptor (file or inline JSON)")->required();
  rate->add_option("--sigma", sigma, "noise level")->required();
  rate->add_flag("--closed-form", closed_form, "also report the closed-form rate");
  rate->add_option("--c", c_const, "local entropy constant");
  rate->add_option("--seed", seed, "packing seed");
  rate->add_option("--out", out_path, "JSON output path");
  rate->add_option("--trace-csv", csv_path, "entropy trace CSV path");

  auto* entropy = app.add_subcommand("entropy", "local or global packing entropy");
  entropy->add_option("--body", body_arg)->required();
  entropy->add_option("--epsilon", epsilon, "scale");
  entropy->add_option("--epsilons", epsilons_arg, "comma-separated scales for a curve");
  entropy->add_flag("--global", global, "global instead of local entropy");
  entropy->add_option("--c", c_const);
  entropy->add_option("--seed", seed);
  entropy->add_option("--out", out_path);
  entropy->add_option("--csv", csv_path, "curve CSV path (epsilon,log_count)");

  auto* estimate = app.add_subcommand("estimate", "run an estimator on one observation");
  estimate->add_option("--body", body_arg)->required();
  estimate->add_option("--y", y_arg, "observation (CSV file or inline list)")->required();
  estimate->add_option("--method", method, "iterative | unbounded | lse | projection")
      ->check(CLI::IsMember({"iterative", "unbounded", "lse", "projection"}));
  estimate->add_option("--sigma", sigma, "noise level (unbounded, projection)");
  estimate->add_option("--sigma-lower", sigma_lower, "known lower bound on sigma");
  estimate->add_option("--depth", depth, "fixed depth; derived from --sigma-lower when omitted");
  estimate->add_option("--c", c_const);
  estimate->add_option("--seed", seed, "packing seed");
  estimate->add_option("--out", out_path);

  auto* risk = app.add_subcommand("risk", "Monte Carlo risk for an experiment spec");
  risk->add_option("--spec", spec_arg, "experiment spec (file or inline JSON)")->required();
  risk->add_option("--seed", seed, "master seed override");
  risk->add_option("--out", out_path, "report path (defaults to the spec's output)");
  risk->add_option("--csv", csv_path, "flat CSV path");

  auto* compare = app.add_subcommand("compare", "compare estimators on an experiment spec");
  compare->add_option("--spec", spec_arg)->required();
  compare->add_option("--seed", seed);
  compare->add_option("--out", out_path);
  compare->add_option("--csv", csv_path);

  auto* pack = app.add_subcommand("pack", "greedy packing of a localized body");
  pack->add_option("--body", body_arg)->required();
  pack->add_option("--center", center_arg, "center point (defaults to the body center)");
  pack->add_option("--radius", radius)->required();
  pack->add_option("--separation", separation)->required();
  pack->add_option("--certify", probes, "covering probes");
  pack->add_option("--c", c_const);
  pack->add_option("--seed", seed);
  pack->add_option("--out", out_path);

  auto* lemma4 = app.add_subcommand("lemma4", "two-point test error experiment");
  lemma4->add_option("--C", C, "separation multiple");
  lemma4->add_option("--delta", delta);
  lemma4->add_option("--sigma", sigma)->required();
  lemma4->add_option("--R", reps, "replications");
  lemma4->add_option("--seed", seed);
  lemma4->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    const std::string opts = options_json(c_const, seed);
    if (*rate) {
      Body body(body_arg);
      OwnedString js;
      check(locmm_epsilon_star(body.b, sigma, opts.c_str(), &js.p));
      auto j = nlohmann::json::parse(js.str());
      std::string summary = "epsilon_star=" + fmt(j.at("epsilon_star").get<double>()) +
                            " rate_sq=" + fmt(j.at("rate_sq").get<double>());
      std::string text = js.str();
      if (closed_form) {
        double cf = 0;
        check(locmm_rate_closed_form(body.b, sigma, &cf));
        summary += " closed_form=" + fmt(cf);
        // Splice the value in without re-serializing the library's output.
        const auto brace = text.find('{');
        text.insert(brace + 1, "\n  \"closed_form_rate\": " + nlohmann::json(cf).dump() + ",");
      }
      if (!csv_path.empty()) {
        std::string csv = "epsilon,log_count\n";
        for (const auto& row : j.at("entropy_trace"))
          csv += nlohmann::json(row.at("epsilon")).dump() + "," + nlohmann::json(row.at("log_count")).dump() + "\n";
        write_file(csv_path, csv);
      }
      emit(text, out_path, summary);
    } else if (*entropy) {
      Body body(body_arg);
      std::vector<double> scales;
      if (epsilon) scales.push_back(*epsilon);
      if (!epsilons_arg.empty())
        for (double e : parse_numbers(epsilons_arg)) scales.push_back(e);
      if (scales.empty()) throw CliError{kExitValidation, "give --epsilon or --epsilons"};
      std::vector<std::string> results;
      std::string csv = "epsilon,log_count\n";
      std::string summary;
      for (double e : scales) {
        OwnedString js;
        check(locmm_entropy(body.b, e, global ? 1 : 0, opts.c_str(), &js.p));
        auto j = nlohmann::json::parse(js.str());
        csv += nlohmann::json(e).dump() + "," + nlohmann::json(j.at("log_count")).dump() + "\n";
        summary += (summary.empty() ? "" : " ") + std::string("log_count(") + fmt(e) + ")=" +
                   fmt(j.at("log_count").get<double>());
        results.push_back(js.str());
      }
      std::string text = results.size() == 1 ? results[0] : "[\n" + [&] {
        std::string s;
        for (std::size_t i = 0; i < results.size(); ++i) s += (i ? ",\n" : "") + results[i];
        return s;
      }() + "\n]";
      if (!csv_path.empty()) write_file(csv_path, csv);
      emit(text, out_path, summary);
    } else if (*estimate) {
      Body body(body_arg);
      const auto y = read_vector(y_arg);
      if (y.size() != body.dim()) throw CliError{kExitValidation, "y has the wrong dimension"};
      if ((method == "unbounded" || method == "projection") && sigma < 0)
        throw CliError{kExitValidation, "--sigma is required for " + method};
      if (sigma_lower && *sigma_lower < 0) throw CliError{kExitValidation, "--sigma-lower must be >= 0"};
      OwnedString js;
      check(locmm_estimate(body.b, y.data(), y.size(), method.c_str(), std::max(sigma, 0.0),
                           sigma_lower.value_or(0.0), depth, opts.c_str(), &js.p));
      auto j = nlohmann::json::parse(js.str());
      std::string summary = method + " final_point=" + j.at("final_point").dump();
      if (j.contains("depth")) summary += " depth=" + j.at("depth").dump();
      emit(js.str(), out_path, summary);
    } else if (*risk || *compare) {
      const std::string spec_text = file_or_inline(spec_arg);
      std::string out = out_path;
      if (out.empty()) {
        auto sj = nlohmann::json::parse(spec_text, nullptr, false);
        if (sj.is_object() && sj.contains("output") && sj.at("output").is_string())
          out = sj.at("output").get<std::string>();
      }
      const auto start = std::chrono::steady_clock::now();
      OwnedString rep, csv;
      check(locmm_risk(spec_text.c_str(), seed.value_or(0), seed ? 1 : 0, *compare ? 1 : 0, &rep.p, &csv.p));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!csv_path.empty())
        write_file(csv_path, csv.str());
      else if (!out.empty())
        write_file(csv_path_for(out), csv.str());
      auto j = nlohmann::json::parse(rep.str());
      std::string summary = std::to_string(j.at("cells").size()) + " cells";
      for (const auto& w : j.at("worst_over_listed_mu"))
        summary += "; " + w.at("estimator").get<std::string>() + "@sigma=" +
                   fmt(w.at("sigma").get<double>()) + " worst-over-listed-mu mse=" +
                   (w.at("mse").is_number() ? fmt(w.at("mse").get<double>()) : std::string("nan"));
      summary += "; runtime " + fmt(secs) + "s";
      emit(rep.str(), out, summary);
    } else if (*pack) {
      Body body(body_arg);
      std::vector<double> center(body.dim());
      if (center_arg.empty())
        check(locmm_body_center(body.b, center.data()));
      else
        center = parse_numbers(center_arg);
      if (center.size() != body.dim()) throw CliError{kExitValidation, "center has the wrong dimension"};
      OwnedString js;
      check(locmm_pack(body.b, center.data(), center.size(), *radius, *separation, probes, opts.c_str(), &js.p));
      auto j = nlohmann::json::parse(js.str());
      std::string summary = "cardinality=" + j.at("cardinality").dump() + " verified=" + j.at("verified").dump();
      if (j.at("certified_cover_fraction").is_number())
        summary += " cover=" + fmt(j.at("certified_cover_fraction").get<double>());
      emit(js.str(), out_path, summary);
    } else if (*lemma4) {
      OwnedString js;
      check(locmm_lemma4(C, delta, sigma, reps, seed.value_or(0), &js.p));
      auto j = nlohmann::json::parse(js.str());
      emit(js.str(), out_path,
           "empirical=" + fmt(j.at("empirical_rate").get<double>()) + " bound=" + fmt(j.at("bound").get<double>()) +
               " within=" + j.at("within_bound").dump());
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
