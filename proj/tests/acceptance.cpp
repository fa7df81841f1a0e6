// Runs every scenario at the production grid, a repeat and a coarser grid,
// then prints one pass/fail line per acceptance criterion.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rflab/scenario.hpp"

using nlohmann::json;

namespace {

struct Run {
  rflab::ScenarioOutcome outcome;
  double seconds = 0.0;
};

Run run(const rflab::ScenarioConfig& config, const std::filesystem::path& out, const std::string& dir) {
  const auto start = std::chrono::steady_clock::now();
  Run r{rflab::run_scenario(config), 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.empty()) rflab::write_outcome(r.outcome, out / dir);
  std::cerr << dir << ": exit " << r.outcome.exit_code << " in " << r.seconds << " s\n";
  return r;
}

const json* find_check(const json& report, const std::string& name) {
  for (const json& c : report["checks"]) {
    if (c["name"] == name) return &c;
  }
  return nullptr;
}

class Criterion {
 public:
  void require(const std::string& scenario, const json& report, const std::string& check) {
    const json* c = find_check(report, check);
    if (c == nullptr) {
      fail(scenario + "/" + check + " missing");
    } else if ((*c)["status"] != "pass") {
      fail(scenario + "/" + check + " " + (*c)["status"].get<std::string>());
    }
  }
  void fail(const std::string& why) {
    ok_ = false;
    detail_ += (detail_.empty() ? "" : "; ") + why;
  }
  void info(const std::string& text) { info_ += (info_.empty() ? "" : "; ") + text; }
  bool print(int index, const std::string& title) const {
    std::cout << (ok_ ? "PASS" : "FAIL") << " criterion " << index << ": " << title;
    if (!detail_.empty()) std::cout << " [" << detail_ << "]";
    if (!info_.empty()) std::cout << " (" << info_ << ")";
    std::cout << '\n';
    return ok_;
  }

 private:
  bool ok_ = true;
  std::string detail_, info_;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

// Oracle-checked values are those compared against a reference value. A
// nonzero reference must agree between grids to `relative`; a zero
// reference has no relative scale, so both grids must meet the oracle.
void compare_grids(Criterion& cr, const std::string& scenario, const json& fine, const json& coarse, double relative) {
  double worst = 0.0;
  std::size_t compared = 0;
  for (const json& cf : fine["checks"]) {
    const json* cc = find_check(coarse, cf["name"].get<std::string>());
    if (cc == nullptr) continue;
    for (const json& vf : cf["values"]) {
      if (!vf.contains("reference") || !vf["reference"].is_number_float() || !vf["value"].is_number()) continue;
      const json* vc = nullptr;
      for (const json& v : (*cc)["values"]) {
        if (v["name"] == vf["name"]) vc = &v;
      }
      const std::string where = scenario + "/" + cf["name"].get<std::string>() + "/" + vf["name"].get<std::string>();
      if (vc == nullptr || !(*vc)["value"].is_number()) {
        cr.fail(where + " missing on the coarse grid");
        continue;
      }
      ++compared;
      const double a = vf["value"], b = (*vc)["value"], ref = vf["reference"];
      if (ref == 0.0) {
        if (!vf["pass"].get<bool>() || !(*vc)["pass"].get<bool>()) cr.fail(where + " misses the oracle on a grid");
        cr.info(where + " changes by " + fmt(std::abs(a - b)) + " (reference 0)");
        continue;
      }
      const double drift = std::abs(a - b) / std::max({std::abs(ref), std::abs(a), std::abs(b)});
      worst = std::max(worst, drift);
      if (drift >= relative) cr.fail(where + " drifts " + fmt(drift));
    }
  }
  if (compared == 0) cr.fail(scenario + ": no oracle-checked values");
  cr.info(scenario + " worst drift " + fmt(worst) + " over " + std::to_string(compared) + " values");
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "";
  const std::vector<std::string> names = {"gaussian", "sphere", "cylinder", "neckpinch"};

  std::map<std::string, Run> fine, coarse;
  for (const std::string& s : names) fine[s] = run(rflab::default_config(s), out, s);
  const Run repeat = run(rflab::default_config("sphere"), out, "sphere_repeat");
  for (const std::string& s : names) {
    rflab::ScenarioConfig c = rflab::default_config(s);
    c.points = (c.points - 1) / 2 + 1;
    coarse[s] = run(c, out, s + "_coarse");
  }
  auto report = [&](const std::string& s) -> const json& { return fine.at(s).outcome.report; };

  bool all = true;
  {
    Criterion cr;
    for (const std::string s : {"sphere", "cylinder"}) {
      cr.require(s, report(s), "fidelity");
      if (fine.at(s).seconds >= 60.0) cr.fail(s + " took " + fmt(fine.at(s).seconds) + " s");
      cr.info(s + " " + fmt(fine.at(s).seconds) + " s");
    }
    all &= cr.print(1, "exact-flow fidelity and runtime");
  }
  {
    Criterion cr;
    for (const std::string s : {"sphere", "cylinder", "neckpinch"}) cr.require(s, report(s), "type_one");
    all &= cr.print(2, "type I bounds");
  }
  {
    Criterion cr;
    for (const std::string s : {"gaussian", "sphere", "cylinder"}) cr.require(s, report(s), "reduced_distance");
    all &= cr.print(3, "reduced distance oracles");
  }
  {
    Criterion cr;
    for (const std::string s : {"gaussian", "sphere", "cylinder"}) cr.require(s, report(s), "density");
    all &= cr.print(4, "reduced volume and density oracles");
  }
  const std::pair<int, std::string> per_scenario[] = {
      {5, "monotonicity"}, {6, "subsolution"}, {7, "naber"}};
  const std::string titles[] = {"reduced volume monotonicity", "subsolution inequality", "Naber envelope"};
  for (int i = 0; i < 3; ++i) {
    Criterion cr;
    for (const std::string& s : names) cr.require(s, report(s), per_scenario[i].second);
    all &= cr.print(per_scenario[i].first, titles[i]);
  }
  {
    Criterion cr;
    for (const std::string s : {"sphere", "gaussian", "neckpinch"}) cr.require(s, report(s), "classification");
    all &= cr.print(8, "singular set nesting and coincidence");
  }
  {
    Criterion cr;
    for (const std::string s : {"neckpinch", "sphere"}) cr.require(s, report(s), "blowup");
    all &= cr.print(9, "nontrivial blow-up profiles");
  }
  {
    Criterion cr;
    for (const std::string s : {"sphere", "neckpinch"}) cr.require(s, report(s), "volume_decay");
    all &= cr.print(10, "volume decay");
  }
  {
    Criterion cr;
    for (const std::string s : {"gaussian", "sphere"}) cr.require(s, report(s), "ball_inclusion");
    all &= cr.print(11, "ball inclusion");
  }
  {
    Criterion cr;
    if (repeat.outcome.report != report("sphere")) {
      cr.fail("repeated sphere reports differ: " + rflab::compare_reports(report("sphere"), repeat.outcome.report).dump());
    }
    for (const std::string& s : names) compare_grids(cr, s, report(s), coarse.at(s).outcome.report, 5e-3);
    all &= cr.print(12, "determinism and grid refinement");
  }
  return all ? 0 : 1;
}
