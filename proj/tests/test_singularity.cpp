#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rflab/ball_inclusion.hpp"
#include "rflab/singularity.hpp"

using namespace rflab;

namespace {

const FlowHistory& sphere() {
  static const FlowHistory h =
      sample_exact_history(make_exact_flow(ExactFamily::ShrinkingSphere, 3, 1.0), 201, 1e-4, 16);
  return h;
}

}  // namespace

TEST_CASE("sphere: every point in every set") {
  const SingularSetReport r = classify_singular_points(sphere());
  CHECK(r.reliable);
  CHECK(r.nested());
  for (int set = 0; set < 5; ++set) CHECK(r.count(set) == r.points.size());
  CHECK(verify_coincidence(r).passes);
  CHECK(rho_stability(sphere()).stable);
}

TEST_CASE("flat: no singular time, empty sets") {
  const FlowHistory h = sample_exact_history(make_exact_flow(ExactFamily::GaussianFlat, 3, 1.0), 101, 1e-3, 8);
  const SingularSetReport r = classify_singular_points(h);
  CHECK_FALSE(r.reliable);
  for (int set = 0; set < 5; ++set) CHECK(r.count(set) == 0);
}

TEST_CASE("too few decades is unreliable") {
  const FlowHistory h = sample_exact_history(make_exact_flow(ExactFamily::ShrinkingSphere, 3, 1.0), 101, 1e-2, 16);
  const SingularSetReport r = classify_singular_points(h);
  CHECK_FALSE(r.reliable);
  CHECK(r.status.find("unreliable") != std::string::npos);
}

TEST_CASE("property: nesting holds for any rate floor") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lr(-4.0, 0.5);
  const FlowHistory h = sample_exact_history(make_exact_flow(ExactFamily::ShrinkingCylinder, 3, 1.0), 101, 1e-4, 8);
  for (int trial = 0; trial < 8; ++trial) {
    ClassificationOptions o;
    o.rho = std::pow(10.0, lr(rng));
    o.points = 17;
    CHECK(classify_singular_points(h, o).nested());
  }
}

TEST_CASE("sphere volume decays like tau^{n/2}") {
  const SingularSetReport r = classify_singular_points(sphere());
  const VolumeDecay v = volume_decay(sphere(), r, membership_mask(r, 4));
  CHECK(v.exponent == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(v.decays);
  const SigmaRkDecomposition d = sigma_rk_decomposition(sphere(), r);
  CHECK(d.holds);
}

TEST_CASE("rescaling") {
  const FlowHistory& h = sphere();
  // lambda = 1 is a time shift.
  const RescaledHistory id = parabolic_rescale(h, 1.0, 0.0);
  CHECK(id.history.snapshots[3].time == doctest::Approx(h.snapshots[3].time - h.singular_time));
  CHECK(id.history.snapshots[3].psi == h.snapshots[3].psi);
  // g_j(-1) is the round sphere of radius^2 2(n-1).
  const double lambda = 1.0 / (h.singular_time - h.snapshots[10].time);
  const RescaledHistory r = parabolic_rescale(h, lambda, 0.0);
  const WarpedMetric g = r.history.metric_at(-1.0);
  CHECK(g.length() == doctest::Approx(std::numbers::pi * 2.0).epsilon(1e-8));
  CHECK(r.type_one_bound);
  CHECK(r.curvature_scaling_error < 1e-8);
}

TEST_CASE("sphere blow-up limit") {
  const ProfileComparison p = blowup_profile(sphere(), std::numbers::pi, default_lambdas(sphere()));
  CHECK(p.family == ShrinkerFamily::Sphere);
  CHECK(p.nontrivial);
  CHECK(p.riem_limit == doctest::Approx(frozen::kSphereRate3).epsilon(1e-3));
}

TEST_CASE("ball inclusion on flat and sphere") {
  for (ExactFamily f : {ExactFamily::GaussianFlat, ExactFamily::ShrinkingSphere}) {
    const FlowHistory h = sample_exact_history(make_exact_flow(f, 3, 1.0), 201, 1e-2, 8);
    double M = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      if (h.snapshots[k].time <= 0.5) M = std::max(M, h.curvatures[k].sup_abs_ric());
    }
    const BallInclusionCheck b = ball_inclusion_check(h, 1.0, 0.5, M);
    CHECK(b.holds);
    CHECK(b.lengths.curves >= 100);
    CHECK(b.lengths.holds);
  }
}
