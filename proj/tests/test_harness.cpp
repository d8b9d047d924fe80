#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sigk/errors.hpp"
#include "sigk/harness.hpp"

using namespace sigk;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "sigk_harness_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string write_config(const fs::path& dir, const nlohmann::json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const nlohmann::json kBubble = {{"manufactured", "bubble-positive"}, {"n", 3}, {"k", 2}, {"points", 9}};

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config parsing rejects unknown checks by name") {
    ::unsetenv("SIGK_OUTPUT_DIR");
    const nlohmann::json j = {{"problem", kBubble}, {"checks", {"admissibility", "no_such_check"}}};
    try {
      (void)parse_suite_config(j);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("no_such_check") != std::string::npos);
    }
    const SuiteConfig c = parse_suite_config(
        {{"problem", kBubble},
         {"checks", {"admissibility", {{"name", "residual"}, {"overrides", {{"tolerance", 1e-3}}}}}},
         {"seed", 7},
         {"output", "x"}});
    REQUIRE(c.checks.size() == 2);
    CHECK(c.checks[1].name == "residual");
    CHECK(c.checks[1].overrides["tolerance"] == 1e-3);
    CHECK(c.seed == 7);
    CHECK(std::find(check_names().begin(), check_names().end(), "moser_schedule") != check_names().end());
    CHECK_THROWS_AS((void)load_suite_config("/nonexistent/config.json"), ConfigError);
    CHECK_THROWS_AS((void)parse_suite_config({{"problem", kBubble}, {"checks", {{{"name", "residual"}, {"tolerance", 1}}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_suite_config({{"problem", kBubble}, {"seed", -1}}), ConfigError);
    CHECK_THROWS_AS((void)parse_suite_config({{"problem", kBubble}, {"extra", 1}}), ConfigError);
  }

  TEST_CASE("output directory override") {
    ::setenv("SIGK_OUTPUT_DIR", "/tmp/elsewhere", 1);
    const SuiteConfig c = parse_suite_config({{"problem", kBubble}, {"checks", {"admissibility"}}});
    CHECK(c.output_dir == "/tmp/elsewhere");
    ::unsetenv("SIGK_OUTPUT_DIR");
  }

  TEST_CASE("problem resolution") {
    const ProblemContext ctx = resolve_problem(kBubble, ".");
    CHECK(ctx.spec.n == 3);
    CHECK(ctx.field.grid().points()[0] == 9);
    CHECK(ctx.field_source == "exact");
    REQUIRE(ctx.manufactured);
    const ProblemContext finer = resolve_at(ctx, 13);
    CHECK(finer.field.grid().points()[0] == 13);
    const ProblemContext cap = resolve_problem({{"manufactured", "cap-negative"}, {"n", 3}, {"k", 2}, {"points", 9}}, ".");
    CHECK(cap.positive_field[0] == doctest::Approx(-cap.field[0]));
    CHECK_THROWS_AS((void)resolve_problem({{"manufactured", "bubble-positive"}, {"points", 3}}, "."), ConfigError);
    CHECK_THROWS_AS((void)resolve_problem({{"spec", {{"n", 3}}}}, "."), ConfigError);
  }

  TEST_CASE("run_check turns errors inside checks into failed reports") {
    const SuiteConfig cfg = parse_suite_config({{"problem", kBubble}, {"checks", {"admissibility"}}});
    const ProblemContext ctx = resolve_problem(kBubble, ".");
    const CheckReport ok = run_check({"cancellation_identities", {}}, &ctx, cfg);
    CHECK(ok.pass);
    // B_2R does not fit: the probe fails with the error class recorded.
    const CheckReport bad = run_check({"reverse_holder_probe", {{"R", 0.4}, {"rho", 0.1}}}, &ctx, cfg);
    CHECK_FALSE(bad.pass);
    CHECK(bad.details["error"]["class"] == "DimensionError");
    CHECK_THROWS_AS((void)run_check({"reverse_holder_probe", {{"q", 1.5}}}, &ctx, cfg), ThresholdError);
    const CheckReport alg = run_check({"algebraic_identities", {{"samples", 20}, {"n_max", 4}}}, nullptr, cfg);
    CHECK(alg.pass);
  }

  TEST_CASE("verify: exit codes and deterministic reports") {
    const fs::path d = scratch_dir("verify");
    const nlohmann::json good = {{"problem", kBubble},
                                 {"checks", {"admissibility", "residual", "cancellation_identities", "moser_schedule"}},
                                 {"output", "out"}};
    CHECK(cli_verify(write_config(d, good)) == kExitPass);
    const std::string first = slurp(d / "out" / "run.json");
    CHECK(fs::exists(d / "out" / "admissibility.csv"));
    CHECK(cli_verify(write_config(d, good)) == kExitPass);
    CHECK(slurp(d / "out" / "run.json") == first);
    const nlohmann::json run = nlohmann::json::parse(first);
    CHECK(run["environment"]["seed"] == 1);
    CHECK(run["checks"].size() == 4);

    nlohmann::json unknown = good;
    unknown["checks"] = {"admissibility", "no_such_check"};
    CHECK(cli_verify(write_config(d, unknown)) == kExitConfigError);
    CHECK(cli_verify((d / "missing.json").string()) == kExitConfigError);

    const nlohmann::json inadmissible = {
        {"problem",
         {{"spec",
           {{"n", 3},
            {"k", 2},
            {"box", {{"lo", -0.5}, {"hi", 0.5}}},
            {"h_model", {{"variant", "Zero"}}},
            {"f_model", {{"expression", "1"}}}}},
          {"field", {{"expression", "1 - xsq"}}},
          {"points", 9}}},
        {"checks", {"admissibility"}},
        {"output", "bad"}};
    CHECK(cli_verify(write_config(d, inadmissible)) == kExitCheckFailure);
    const nlohmann::json bad_run = nlohmann::json::parse(slurp(d / "bad" / "run.json"));
    CHECK(bad_run["checks"][0]["name"] == "admissibility");
    CHECK(bad_run["checks"][0]["pass"] == false);

    nlohmann::json threshold = good;
    threshold["checks"] = {{{"name", "reverse_holder_probe"}, {"overrides", {{"q", 1.5}}}}};
    CHECK(cli_verify(write_config(d, threshold)) == kExitThreshold);
  }

  TEST_CASE("moser command") {
    CHECK(cli_moser(2, 3, "4", "case1") == kExitPass);
    CHECK(cli_moser(2, 3, "3", "case1") == kExitThreshold);
    CHECK(cli_moser(3, 3, "10", "k>=3-general") == kExitPass);
    CHECK(cli_moser(2, 3, "four", "case1") == kExitConfigError);
    CHECK(cli_moser(2, 3, "4", "case9") == kExitConfigError);
  }

  TEST_CASE("solve command") {
    const fs::path d = scratch_dir("solve");
    const nlohmann::json quad = {
        {"problem", {{"manufactured", "quadratic-khessian"}, {"n", 3}, {"k", 2}, {"points", 9}, {"init", "exact"}}},
        {"output", "q"}};
    CHECK(cli_solve(write_config(d, quad)) == kExitPass);
    const nlohmann::json solve = nlohmann::json::parse(slurp(d / "q" / "solve.json"));
    CHECK(solve["iterations"] == 1);
    CHECK(fs::exists(d / "q" / "solution.csv"));
    const nlohmann::json missing = {
        {"problem",
         {{"spec",
           {{"n", 3},
            {"k", 2},
            {"box", {{"lo", -0.5}, {"hi", 0.5}}},
            {"h_model", {{"variant", "Zero"}}},
            {"f_model", {{"expression", "1"}}}}},
          {"boundary", "does_not_exist.csv"}}},
        {"output", "m"}};
    CHECK(cli_solve(write_config(d, missing)) == kExitConfigError);
  }

  TEST_CASE("sweep command writes a long-form table") {
    const fs::path d = scratch_dir("sweep");
    const nlohmann::json j = {{"problem", kBubble},
                              {"sweep", {{"check", "reverse_holder_probe"}, {"values", {4, 4.5, 5}}}},
                              {"output", "s"}};
    CHECK(cli_sweep(write_config(d, j), "q") == kExitPass);
    bool found = false;
    for (const auto& e : fs::directory_iterator(d / "s")) {
      if (e.path().extension() != ".csv") continue;
      const std::string csv = slurp(e.path());
      CHECK(csv.rfind("axis,value,h,lhs,rhs,residual,implied_constant,pass", 0) == 0);
      found = true;
    }
    CHECK(found);
    CHECK(cli_sweep(write_config(d, j), "time") == kExitConfigError);
  }
}
