#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "rflab/flow.hpp"
#include "rflab/material.hpp"

using namespace rflab;

namespace {

const FlowHistory& evolved_sphere() {
  static const FlowHistory h = [] {
    const ExactFlow ex = make_exact_flow(ExactFamily::ShrinkingSphere, 3, 1.0);
    FlowConfig cfg;
    cfg.stop_curvature = 1e3;
    return evolve(ex.evaluate(0.0, 101), cfg);
  }();
  return h;
}

}  // namespace

TEST_CASE("evolved sphere follows the closed form") {
  const FlowHistory& h = evolved_sphere();
  const ExactFlow ex = make_exact_flow(ExactFamily::ShrinkingSphere, 3, 1.0);
  CHECK(h.status == RunStatus::SingularityReached);
  for (const WarpedMetric& g : h.snapshots) {
    const double r = ex.radius(g.time);
    double peak = 0.0;
    for (double p : g.psi) peak = std::max(peak, p);
    CHECK(peak == doctest::Approx(r).epsilon(1e-4));
    CHECK(g.length() == doctest::Approx(std::numbers::pi * r).epsilon(1e-4));
  }
  CHECK(h.singular_time == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(h.type_one.upper == doctest::Approx(frozen::kSphereRate3).epsilon(1e-3));
  CHECK(h.type_one.lower_bound_ok);
}

TEST_CASE("flat space is static") {
  const ExactFlow ex = make_exact_flow(ExactFamily::GaussianFlat, 3, 1.0);
  FlowConfig cfg;
  cfg.final_time = 0.5;
  const FlowHistory h = evolve(ex.evaluate(0.0, 101), cfg);
  CHECK(h.status == RunStatus::FinalTimeReached);
  CHECK_FALSE(h.singular());
  const WarpedMetric& g = h.snapshots.back();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.psi[i] == doctest::Approx(g.s[i] - g.s.front()));
}

TEST_CASE("singular time of sampled shrinkers") {
  for (ExactFamily f : {ExactFamily::ShrinkingSphere, ExactFamily::ShrinkingCylinder}) {
    const FlowHistory h = sample_exact_history(make_exact_flow(f, 3, 1.0), 101, 1e-4, 8);
    const SingularTimeEstimate e = estimate_singular_time(h);
    CHECK(e.determined);
    CHECK(e.time == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(e.exponent == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("interpolation between snapshots is exact on shrinkers") {
  const ExactFlow ex = make_exact_flow(ExactFamily::ShrinkingSphere, 3, 1.0);
  const FlowHistory h = sample_exact_history(ex, 101, 1e-3, 4);
  const double t = 0.8123;
  const WarpedMetric g = h.metric_at(t);
  CHECK(g.length() == doctest::Approx(std::numbers::pi * ex.radius(t)).epsilon(1e-10));
  const MaterialFlow mf(h);
  const MaterialSample ms = mf.at(1.0, t);
  const double scale = ex.radius(t) / ex.radius(0.0);
  CHECK(ms.psi == doctest::Approx(ex.radius(t) * std::sin(1.0 / ex.radius(0.0))).epsilon(1e-6));
  CHECK(ms.s_x == doctest::Approx(scale).epsilon(1e-8));
}

TEST_CASE("dumbbell profile") {
  const WarpedMetric g = dumbbell_profile(3, 0.2, 401);
  CHECK_NOTHROW(validate(g));
  CHECK(g.length() == doctest::Approx(std::numbers::pi));
  CHECK(g.psi[200] == doctest::Approx(0.2));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.psi[i] == doctest::Approx(g.psi[g.size() - 1 - i]));
}

TEST_CASE("history archive round-trips") {
  const FlowHistory h = sample_exact_history(make_exact_flow(ExactFamily::ShrinkingCylinder, 3, 1.0), 51, 1e-2, 4);
  std::stringstream ss;
  write_history(ss, h);
  const FlowHistory r = read_history(ss);
  REQUIRE(r.size() == h.size());
  CHECK(r.singular_time == h.singular_time);
  for (std::size_t k = 0; k < h.size(); ++k) {
    CHECK(r.snapshots[k].time == h.snapshots[k].time);
    CHECK(r.labels[k] == h.labels[k]);
    CHECK(r.snapshots[k].psi == h.snapshots[k].psi);
  }
}
