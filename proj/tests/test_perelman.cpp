#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rflab/perelman.hpp"
#include "rflab/singularity.hpp"

using namespace rflab;

namespace {

const FlowHistory& sampled(ExactFamily f) {
  static const FlowHistory sphere =
      sample_exact_history(make_exact_flow(ExactFamily::ShrinkingSphere, 3, 1.0), 201, 1e-4, 16);
  static const FlowHistory cylinder =
      sample_exact_history(make_exact_flow(ExactFamily::ShrinkingCylinder, 3, 1.0), 201, 1e-4, 16);
  static const FlowHistory flat = sample_exact_history(make_exact_flow(ExactFamily::GaussianFlat, 3, 1.0), 201, 1e-3, 16);
  return f == ExactFamily::ShrinkingSphere ? sphere : (f == ExactFamily::ShrinkingCylinder ? cylinder : flat);
}

}  // namespace

TEST_CASE("flat reduced distance is d^2 / 4 tau on a 10 x 10 sample") {
  const FlowHistory& h = sampled(ExactFamily::GaussianFlat);
  const MaterialFlow mf(h);
  Basepoint b;
  b.time = h.last_time();
  ReducedDistance rd(mf, b);
  for (int k = 0; k < 10; ++k) {
    const double tbar = 0.09 * k * b.time;
    for (int i = 1; i <= 10; ++i) {
      const double q = 0.3 * i;
      const ReducedDistanceValue v = rd(q, tbar);
      CHECK(v.converged);
      CHECK(v.l == doctest::Approx(q * q / (4.0 * (b.time - tbar))).epsilon(1e-3));
    }
  }
}

TEST_CASE("sphere singular basepoint gives l = n/2") {
  const FlowHistory& h = sampled(ExactFamily::ShrinkingSphere);
  const MaterialFlow mf(h);
  ReducedDistance rd(mf, singular_basepoint(h, std::numbers::pi));
  for (double tbar : {0.3, 0.6, 0.9}) {
    for (double q : {0.2, 1.5, 3.1, 5.0, 6.1}) CHECK(rd(q, tbar).l == doctest::Approx(1.5).epsilon(1e-2));
  }
}

TEST_CASE("cylinder singular basepoint gives x^2 / 4 tau + (n-1)/2") {
  const FlowHistory& h = sampled(ExactFamily::ShrinkingCylinder);
  const MaterialFlow mf(h);
  ReducedDistance rd(mf, singular_basepoint(h, 0.0));
  for (double tbar : {0.3, 0.8}) {
    for (double x : {-3.0, -1.0, 0.0, 0.5, 2.5}) {
      CHECK(rd(x, tbar).l == doctest::Approx(x * x / (4.0 * (1.0 - tbar)) + 1.0).epsilon(2e-2));
    }
  }
}

TEST_CASE("property: L converges under curve refinement") {
  const FlowHistory& h = sampled(ExactFamily::ShrinkingSphere);
  const MaterialFlow mf(h);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uq(0.3, 6.0), ut(0.0, 0.6);
  for (int trial = 0; trial < 6; ++trial) {
    const double q = uq(rng), tbar = ut(rng);
    std::vector<double> l;
    for (int nodes : {8, 16, 32, 64}) {
      const LCurve c = minimize_L(mf, 1.0, 0.9, q, tbar, nodes);
      CHECK(c.converged);
      l.push_back(c.reduced_distance);
    }
    // Successive changes shrink at least geometrically.
    for (std::size_t k = 2; k < l.size(); ++k) {
      CHECK(std::abs(l[k] - l[k - 1]) <= 0.5 * std::abs(l[k - 1] - l[k - 2]) + 1e-9);
    }
  }
}

TEST_CASE("property: l is invariant under parabolic rescaling") {
  const FlowHistory& h = sampled(ExactFamily::ShrinkingSphere);
  const MaterialFlow mf(h);
  for (double lambda : {2.0, 4.0, 10.0}) {
    const RescaledHistory rh = parabolic_rescale(h, lambda, std::numbers::pi);
    const MaterialFlow rf(rh.history);
    const double a = std::sqrt(lambda);
    ReducedDistance orig(mf, singular_basepoint(h, std::numbers::pi));
    ReducedDistance resc(rf, singular_basepoint(rh.history, a * std::numbers::pi));
    for (double q : {1.0, 2.5, 4.0}) {
      CHECK(resc(a * q, -1.0).l == doctest::Approx(orig(q, 1.0 - 1.0 / lambda).l).epsilon(1e-2));
    }
  }
}

TEST_CASE("densities of the exact flows") {
  const DensityEstimate s = density(MaterialFlow(sampled(ExactFamily::ShrinkingSphere)), std::numbers::pi);
  const DensityEstimate c = density(MaterialFlow(sampled(ExactFamily::ShrinkingCylinder)), 0.0);
  const DensityEstimate f = density(MaterialFlow(sampled(ExactFamily::GaussianFlat)), 0.0);
  CHECK(s.theta == doctest::Approx(frozen::kSphereDensity3).epsilon(1e-2));
  CHECK(c.theta == doctest::Approx(frozen::kCylinderDensity3).epsilon(1e-2));
  CHECK(f.theta == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(s.verdict == GapVerdict::Singular);
  CHECK(c.verdict == GapVerdict::Singular);
  CHECK(f.verdict == GapVerdict::Regular);
  // Ordering flat > sphere > cylinder.
  CHECK(f.theta > s.theta);
  CHECK(s.theta > c.theta);
  for (const DensityEstimate* d : {&s, &c, &f}) {
    const MonotonicityReport m = monotonicity_check(d->series);
    CHECK(m.nondecreasing);
    CHECK(m.bounded);
    CHECK(m.constant);
  }
}

TEST_CASE("monotonicity check flags a decrease") {
  ReducedVolumeSeries s;
  for (double v : {0.90, 0.91, 0.905, 0.92}) {
    ReducedVolumeSample x;
    x.time = 0.1 * static_cast<double>(s.samples.size());
    x.value = v;
    s.samples.push_back(x);
  }
  const MonotonicityReport m = monotonicity_check(s);
  CHECK_FALSE(m.nondecreasing);
  CHECK(m.worst_decrease == doctest::Approx(0.005));
}

TEST_CASE("box* v vanishes on the Gaussian and converges at second order") {
  const FlowHistory& h = sampled(ExactFamily::GaussianFlat);
  const MaterialFlow mf(h);
  Basepoint b;
  b.time = h.last_time();
  const RefinementStudy st = subsolution_refinement(mf, b, {0.5, 3.0, 0.2, 0.7, 8, 4}, LOptions{}, 3);
  CHECK(st.reports.back().max_abs <= 1e-3);
  for (double r : st.ratios) CHECK(r >= 3.0);
  const NaberEnvelope e0 = naber_envelope(mf, st.reports[1].field);
  const NaberEnvelope e1 = naber_envelope(mf, st.reports[2].field);
  CHECK(e1.finite);
  CHECK(std::abs(e1.k_fit / e0.k_fit - 1.0) < 0.1);
  // l = d^2 / 4 tau needs K >= 1/4 for the quadratic upper bound.
  CHECK(e1.k_quadratic >= 0.25);
}

TEST_CASE("sphere gradient bound holds with a small constant") {
  const FlowHistory& h = sampled(ExactFamily::ShrinkingSphere);
  const MaterialFlow mf(h);
  const Basepoint b = singular_basepoint(h, 0.0);
  const ReducedDistanceField f = reduced_distance_field(mf, b, {1.0, 1.5, 2.0, 2.5, 3.0}, {0.5, 0.6, 0.7});
  const NaberEnvelope e = naber_envelope(mf, f);
  CHECK(e.finite);
  CHECK(e.k_gradient < 1e-2);
}
