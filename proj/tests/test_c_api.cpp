#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "locmm/locmm.h"

#include "json.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kSegment = R"({"type":"hyperrectangle","a":[2]})";
const char* kSquare = R"({"type":"hyperrectangle","a":[2,2]})";

std::string take(char* s) {
  std::string out = s ? s : "";
  locmm_string_free(s);
  return out;
}

fs::path tmp_dir() {
  fs::path d(LOCMM_TEST_TMP);
  fs::create_directories(d);
  return d;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) out += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
  return out + "'";
}

int run_cli(const std::string& args, const std::string& stdout_file = "/dev/null") {
  const std::string cmd = std::string(LOCMM_CLI_PATH) + " " + args + " > " + quote(stdout_file) + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("body handles and geometry") {
  locmm_body* b = nullptr;
  REQUIRE(locmm_body_from_json(kSquare, &b) == LOCMM_OK);
  size_t n = 0;
  CHECK(locmm_body_dimension(b, &n) == LOCMM_OK);
  CHECK(n == 2);
  double d = 0;
  CHECK(locmm_body_diameter(b, &d) == LOCMM_OK);
  CHECK(d == doctest::Approx(2 * std::sqrt(2.0)));
  double c[2] = {9, 9};
  CHECK(locmm_body_center(b, c) == LOCMM_OK);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 0.0);
  const double x[2] = {3, -0.5};
  double p[2];
  CHECK(locmm_body_project(b, x, 2, p) == LOCMM_OK);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(-0.5));
  int inside = -1;
  CHECK(locmm_body_contains(b, p, 2, 1e-9, &inside) == LOCMM_OK);
  CHECK(inside == 1);
  CHECK(locmm_body_contains(b, x, 2, 1e-9, &inside) == LOCMM_OK);
  CHECK(inside == 0);
  char* desc = nullptr;
  CHECK(locmm_body_descriptor(b, &desc) == LOCMM_OK);
  CHECK(json::parse(take(desc)).at("type") == "hyperrectangle");
  locmm_body_free(b);

  locmm_body* cone = nullptr;
  REQUIRE(locmm_body_from_json(R"({"type":"orthant","n":2})", &cone) == LOCMM_OK);
  CHECK(locmm_body_diameter(cone, &d) == LOCMM_OK);
  CHECK(std::isinf(d));
  locmm_body_free(cone);
  locmm_body_free(nullptr);
}

TEST_CASE("status codes and last_error") {
  locmm_body* b = nullptr;
  CHECK(locmm_body_from_json(R"({"type":"nope"})", &b) == LOCMM_ERR_VALIDATION);
  CHECK(b == nullptr);
  CHECK(std::string(locmm_last_error()).find("nope") != std::string::npos);
  CHECK(locmm_body_from_json("{not json", &b) == LOCMM_ERR_VALIDATION);
  CHECK(locmm_body_from_json(kSegment, nullptr) == LOCMM_ERR_VALIDATION);

  REQUIRE(locmm_body_from_json(kSegment, &b) == LOCMM_OK);
  const double y[2] = {0, 0};
  char* out = nullptr;
  CHECK(locmm_estimate(b, y, 2, "lse", 0, 0, 0, nullptr, &out) == LOCMM_ERR_VALIDATION);
  CHECK(out == nullptr);
  CHECK(locmm_estimate(b, y, 1, "oracle", 0, 0, 0, nullptr, &out) == LOCMM_ERR_VALIDATION);
  CHECK(locmm_entropy(b, 0.5, 0, R"({"bogus":1})", &out) == LOCMM_ERR_VALIDATION);
  CHECK(locmm_entropy(b, -1, 0, nullptr, &out) == LOCMM_ERR_VALIDATION);
  double w = 0;
  CHECK(locmm_weak_lp_norm(y, 2, 0, &w) == LOCMM_ERR_VALIDATION);
  locmm_body_free(b);

  locmm_body* cone = nullptr;
  REQUIRE(locmm_body_from_json(R"({"type":"orthant","n":1})", &cone) == LOCMM_OK);
  const double far[1] = {1e12};
  CHECK(locmm_estimate(cone, far, 1, "unbounded", 1e-3, 0, 0, R"({"unbounded_max_m":2})", &out) ==
        LOCMM_ERR_NUMERICAL);
  locmm_body_free(cone);
  CHECK(std::string(locmm_version()).size() > 0);
}

TEST_CASE("JSON-returning operations") {
  locmm_body* b = nullptr;
  REQUIRE(locmm_body_from_json(kSegment, &b) == LOCMM_OK);
  const double center[1] = {0};
  char* out = nullptr;
  REQUIRE(locmm_pack(b, center, 1, 1.0, 0.5, 200, nullptr, &out) == LOCMM_OK);
  auto pk = json::parse(take(out));
  CHECK(pk.at("verified") == true);
  CHECK(pk.at("cardinality").get<int>() >= 3);
  CHECK(pk.at("certified_cover_fraction").get<double>() >= 0.999);

  REQUIRE(locmm_entropy(b, 0.5, 0, R"({"c":16,"seed":1})", &out) == LOCMM_OK);
  auto en = json::parse(take(out));
  CHECK(en.at("kind") == "local");
  CHECK(en.at("log_count").get<double>() > 0);

  const double y[1] = {5};
  REQUIRE(locmm_estimate(b, y, 1, "iterative", 0, 0, 10, nullptr, &out) == LOCMM_OK);
  auto est = json::parse(take(out));
  CHECK(std::abs(est.at("final_point")[0].get<double>() - 1.0) <= 2.0 / 256);
  CHECK(est.at("levels").size() == 10);
  REQUIRE(locmm_estimate(b, y, 1, "lse", 0, 0, 0, nullptr, &out) == LOCMM_OK);
  CHECK(json::parse(take(out)).at("final_point")[0] == 1.0);

  REQUIRE(locmm_epsilon_star(b, 1.0, nullptr, &out) == LOCMM_OK);
  auto r = json::parse(take(out));
  CHECK(r.at("epsilon_star").get<double>() >= 1.68);
  CHECK(r.at("epsilon_star").get<double>() <= 1.87);
  double cf = 0;
  CHECK(locmm_rate_closed_form(b, 1.0, &cf) == LOCMM_OK);
  CHECK(cf == doctest::Approx(2.0));

  REQUIRE(locmm_lemma4(6, 1, 1, 2000, 5, &out) == LOCMM_OK);
  CHECK(json::parse(take(out)).at("within_bound") == true);
  locmm_body_free(b);

  const std::string spec =
      R"({"body":{"type":"hyperrectangle","a":[2]},"estimators":["lse","iterative"],"mu":[[0],[1]],"sigma":[0.1],"replications":50,"seed":3})";
  char* csv = nullptr;
  REQUIRE(locmm_risk(spec.c_str(), 0, 0, 1, &out, &csv) == LOCMM_OK);
  auto rep = json::parse(take(out));
  CHECK(rep.at("cells").size() == 4);
  CHECK(rep.at("ratios").size() == 2);
  CHECK(take(csv).rfind("mu_id,sigma,estimator,mse,stderr,R,seed\n", 0) == 0);
  REQUIRE(locmm_risk(spec.c_str(), 99, 1, 0, &out, nullptr) == LOCMM_OK);
  CHECK(json::parse(take(out)).at("spec").at("seed") == 99);
}

TEST_CASE("CLI exit codes") {
  const auto dir = tmp_dir();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("rate --sigma 1") == 2);
  CHECK(run_cli("rate --body " + quote(kSegment) + " --sigma 1 --frobnicate") == 2);
  CHECK(run_cli("rate --body " + quote(R"({"type":"nope"})") + " --sigma 1") == 2);
  CHECK(run_cli("estimate --body " + quote(kSegment) + " --y 1,2") == 2);
  CHECK(run_cli("estimate --body " + quote(R"({"type":"orthant","n":1})") +
                " --y 1e12 --method unbounded --sigma 0.001") == 3);

  const auto out = dir / "rate.json";
  const auto trace = dir / "trace.csv";
  REQUIRE(run_cli("rate --body " + quote(kSegment) + " --sigma 1 --closed-form --out " + quote(out.string()) +
                  " --trace-csv " + quote(trace.string())) == 0);
  auto j = json::parse(read_file(out));
  CHECK(j.at("closed_form_rate") == 2.0);
  CHECK(read_file(trace).rfind("epsilon,log_count\n", 0) == 0);

  const auto stdout_file = dir / "pack.json";
  REQUIRE(run_cli("pack --body " + quote(kSquare) + " --radius 1 --separation 0.5 --certify 100",
                  stdout_file.string()) == 0);
  CHECK(json::parse(read_file(stdout_file)).at("verified") == true);

  const auto curve = dir / "curve.csv";
  REQUIRE(run_cli("entropy --body " + quote(kSegment) + " --epsilons 0.5,1,2 --csv " + quote(curve.string())) == 0);
  const std::string c = read_file(curve);
  CHECK(std::count(c.begin(), c.end(), '\n') == 4);
}

TEST_CASE("CLI risk output is byte-identical across runs") {
  const auto dir = tmp_dir();
  const auto spec = dir / "spec.json";
  {
    std::ofstream s(spec);
    s << R"({"body":{"type":"hyperrectangle","a":[2]},"estimators":["lse","iterative","unbounded"],)"
      << R"("mu":{"generator":"extremes","count":3},"sigma":[0.05,0.5],"replications":40,"seed":21})";
  }
  const auto a = dir / "risk_a.json";
  const auto b = dir / "risk_b.json";
  REQUIRE(run_cli("risk --spec " + quote(spec.string()) + " --out " + quote(a.string())) == 0);
  REQUIRE(run_cli("risk --spec " + quote(spec.string()) + " --out " + quote(b.string())) == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(dir / "risk_a.csv") == read_file(dir / "risk_b.csv"));
  CHECK_FALSE(read_file(a).empty());

  const auto c = dir / "risk_c.json";
  REQUIRE(run_cli("risk --spec " + quote(spec.string()) + " --seed 22 --out " + quote(c.string())) == 0);
  CHECK(read_file(a) != read_file(c));
  CHECK(run_cli("risk --spec " + quote((dir / "missing.json").string())) == 2);
}
