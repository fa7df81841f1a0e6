#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "rflab/scenario.hpp"

namespace {

nlohmann::json load_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw rflab::ConfigError("cannot read " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw rflab::ConfigError(path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotationally symmetric Ricci flow singularity analysis"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> checks, sets;
  auto* run = app.add_subcommand("run", "evolve a scenario and verify it");
  run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "multi-start seed");
  run->add_option("--check", checks, "check to run (repeatable; default all)");
  run->add_option("--set", sets, "key=value override (repeatable)");

  std::string first, second;
  double relative = 5e-3;
  auto* compare = app.add_subcommand("compare", "diff two report.json files");
  compare->add_option("first", first)->required();
  compare->add_option("second", second)->required();
  compare->add_option("--relative", relative, "relative tolerance on measured values");

  auto* list = app.add_subcommand("list-scenarios", "print scenario and check names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const std::string& s : rflab::scenario_names()) {
        std::cout << s << '\n';
      }
      std::cout << "checks:";
      for (const std::string& c : rflab::check_names()) std::cout << ' ' << c;
      std::cout << '\n';
      return rflab::kExitPass;
    }
    if (compare->parsed()) {
      const nlohmann::json diff = rflab::compare_reports(load_report(first), load_report(second), relative);
      std::cout << diff.dump(2) << '\n';
      return diff["identical"].get<bool>() ? rflab::kExitPass : rflab::kExitCheckFailed;
    }

    // Precedence: file, then environment, then flags.
    rflab::ConfigEntries entries;
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      entries = rflab::parse_config_text(is);
    }
    for (auto& e : rflab::config_from_environment()) entries.push_back(std::move(e));
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw rflab::ConfigError("--set expects key=value, got '" + s + "'");
      entries.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (*seed_opt) entries.emplace_back("seed", std::to_string(seed));
    if (!checks.empty()) {
      std::string joined;
      for (const std::string& c : checks) joined += (joined.empty() ? "" : ",") + c;
      entries.emplace_back("checks", joined);
    }
    if (!out_dir.empty()) entries.emplace_back("out", out_dir);
    const rflab::ScenarioConfig config = rflab::make_config(entries);
    const std::string dir = config.out.empty() ? "rflab-" + config.scenario : config.out;

    const rflab::ScenarioOutcome outcome = rflab::run_scenario(config);
    rflab::write_outcome(outcome, dir);
    for (const auto& c : outcome.report["checks"]) {
      std::cout << c["status"].get<std::string>() << ' ' << c["name"].get<std::string>() << '\n';
    }
    if (outcome.report.contains("error")) std::cerr << outcome.report["error"].get<std::string>() << '\n';
    std::cout << "report: " << dir << "/report.json\n";
    return outcome.exit_code;
  } catch (const rflab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return rflab::kExitConfig;
  }
}
