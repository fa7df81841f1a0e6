#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "rflab/scenario.hpp"

using namespace rflab;

TEST_CASE("config text parsing") {
  std::istringstream is("# comment\nscenario = cylinder\n  seed=9  # trailing\n\nchecks = density, naber\n");
  const ScenarioConfig c = make_config(parse_config_text(is));
  CHECK(c.scenario == "cylinder");
  CHECK(c.seed == 9);
  CHECK(c.checks == std::vector<std::string>{"density", "naber"});
  CHECK(c.enabled("naber"));
  CHECK_FALSE(c.enabled("blowup"));
}

TEST_CASE("config errors") {
  auto parse = [](const char* text) {
    std::istringstream is(text);
    return make_config(parse_config_text(is));
  };
  CHECK_THROWS_AS(parse("scenario = torus\n"), ConfigError);
  CHECK_THROWS_AS(parse("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("points = many\n"), ConfigError);
  CHECK_THROWS_AS(parse("sigma = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse("checks = density,nonsense\n"), ConfigError);
  CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
}

TEST_CASE("scenario defaults") {
  const ScenarioConfig neck = default_config("neckpinch");
  CHECK(neck.points == 9001);
  CHECK(neck.neck_ratio == 0.15);
  CHECK(neck.tolerance == 1e-7);
  CHECK(neck.resolution_cells == 4.0);
  CHECK(default_config("sphere").points == 201);
}

TEST_CASE("environment overrides") {
  setenv("RFLAB_SEED", "42", 1);
  setenv("RFLAB_NODES", "32", 1);
  const ConfigEntries e = config_from_environment();
  unsetenv("RFLAB_SEED");
  unsetenv("RFLAB_NODES");
  const ScenarioConfig c = make_config(e);
  CHECK(c.seed == 42);
  CHECK(c.nodes == 32);
}

TEST_CASE("serialization round-trips and the hash ignores the output directory") {
  ScenarioConfig c = default_config("neckpinch");
  c.seed = 5;
  c.eta = 0.03;
  c.checks = {"density"};
  std::istringstream is(to_text(c));
  const ScenarioConfig d = make_config(parse_config_text(is));
  CHECK(to_text(d) == to_text(c));
  CHECK(config_hash(d) == config_hash(c));
  ScenarioConfig e = c;
  e.out = "elsewhere";
  CHECK(config_hash(e) == config_hash(c));
  e.seed = 6;
  CHECK(config_hash(e) != config_hash(c));
}

TEST_CASE("report comparison") {
  nlohmann::json a = {{"schema", kReportSchema},
                      {"checks",
                       {{{"name", "density"},
                         {"status", "pass"},
                         {"values", {{{"name", "theta"}, {"value", 0.7910}, {"tolerance", 0.01}}}}}}}};
  CHECK(compare_reports(a, a)["identical"] == true);
  nlohmann::json b = a;
  b["checks"][0]["values"][0]["value"] = 0.80;
  b["checks"][0]["status"] = "fail";
  const nlohmann::json d = compare_reports(a, b);
  CHECK(d["identical"] == false);
  CHECK(d["differences"].size() == 1);
  CHECK(d["status_changes"].size() == 1);
  nlohmann::json c = a;
  c["schema"] = "other/1";
  CHECK_THROWS_AS(compare_reports(a, c), ConfigError);
}

TEST_CASE("gaussian run is deterministic and passes") {
  ScenarioConfig c = default_config("gaussian");
  c.points = 101;
  c.checks = {"fidelity", "reduced_distance", "density", "monotonicity", "classification"};
  const ScenarioOutcome a = run_scenario(c);
  const ScenarioOutcome b = run_scenario(c);
  CHECK(a.exit_code == kExitPass);
  CHECK(a.report == b.report);
  CHECK(a.report["summary"]["fail"] == 0);
  for (const auto& check : a.report["checks"]) {
    for (const auto& v : check["values"]) {
      if (v["value"].is_number_float()) CHECK(v.contains("tolerance"));
    }
  }
  bool has_density = false;
  for (const auto& [name, body] : a.artifacts) has_density = has_density || name.rfind("density_", 0) == 0;
  CHECK(has_density);
  CHECK(a.artifacts.count("snapshots.txt") == 1);
}

TEST_CASE("exit codes") {
  ScenarioConfig c = default_config("sphere");
  c.points = 51;
  c.checks = {"density", "monotonicity"};
  c.constancy_tolerance = 1e-12;  // far below the discretization error
  CHECK(run_scenario(c).exit_code == kExitCheckFailed);

  ScenarioConfig s = default_config("sphere");
  s.points = 51;
  s.stop_curvature = 20.0;  // about one decade of blow-up
  s.checks = {"classification"};
  CHECK(run_scenario(s).exit_code == kExitUnreliable);
}
