#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rflab/solutions.hpp"

using namespace rflab;

TEST_CASE("shrinker radii") {
  for (int n : {3, 4}) {
    const ExactFlow s = make_exact_flow(ExactFamily::ShrinkingSphere, n, 1.0);
    const ExactFlow c = make_exact_flow(ExactFamily::ShrinkingCylinder, n, 1.0);
    for (double t : {0.0, 0.5, 0.99}) {
      CHECK(s.radius(t) * s.radius(t) == doctest::Approx(2.0 * (n - 1) * (1.0 - t)));
      CHECK(c.radius(t) * c.radius(t) == doctest::Approx(2.0 * (n - 2) * (1.0 - t)));
    }
  }
  CHECK_THROWS_AS(make_exact_flow(ExactFamily::ShrinkingCylinder, 2, 1.0), UnsupportedDimension);
}

TEST_CASE("shrinker type I products") {
  const ExactFlow s = make_exact_flow(ExactFamily::ShrinkingSphere, 3, 1.0);
  const ExactFlow c = make_exact_flow(ExactFamily::ShrinkingCylinder, 3, 1.0);
  CHECK(0.3 * s.sup_riem(0.7) == doctest::Approx(frozen::kSphereRate3));
  CHECK(0.3 * c.sup_riem(0.7) == doctest::Approx(frozen::kCylinderRate3));
}

TEST_CASE("canonical-form solitons have small residuals") {
  for (ExactFamily f : {ExactFamily::ShrinkingSphere, ExactFamily::ShrinkingCylinder, ExactFamily::GaussianFlat}) {
    const SolitonResidual r = soliton_residual(soliton_potential(f, 3, 1.0, 0.4));
    CHECK(r.equation < kSolitonResidualTolerance);
    CHECK(r.normalization < kSolitonResidualTolerance);
    CHECK(r.time_coupling < kSolitonResidualTolerance);
  }
}

TEST_CASE("rigidity verdicts") {
  CHECK(rigidity_probe(soliton_potential(ExactFamily::ShrinkingSphere, 3, 1.0, 0.2)).verdict ==
        RigidityVerdict::StrictlyPositiveR);
  CHECK(rigidity_probe(soliton_potential(ExactFamily::GaussianFlat, 3, 1.0, 0.2)).verdict ==
        RigidityVerdict::FlatGaussian);
}

TEST_CASE("material labels follow the shrinking") {
  const ExactFlow s = make_exact_flow(ExactFamily::ShrinkingSphere, 3, 1.0);
  const double scale = s.radius(0.75) / s.radius(0.0);
  CHECK(s.material_label(0.3 * scale, 0.75) == doctest::Approx(0.3));
  CHECK(family_from_name("gaussian") == ExactFamily::GaussianFlat);
}
