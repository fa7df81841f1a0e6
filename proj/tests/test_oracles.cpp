#include <doctest.h>

#include "oracles.hpp"

TEST_CASE("frozen oracle values reproduce") {
  CHECK(oracle::sphere_density(3) == doctest::Approx(frozen::kSphereDensity3).epsilon(1e-10));
  CHECK(oracle::cylinder_density(3) == doctest::Approx(frozen::kCylinderDensity3).epsilon(1e-10));
  CHECK(oracle::sphere_rate(3) == doctest::Approx(frozen::kSphereRate3).epsilon(1e-14));
  CHECK(oracle::cylinder_rate(3) == doctest::Approx(frozen::kCylinderRate3).epsilon(1e-14));
}

TEST_CASE("densities do not depend on the sampled time") {
  for (double tau : {0.01, 0.3, 5.0}) {
    CHECK(oracle::sphere_density(4, tau) == doctest::Approx(oracle::sphere_density(4, 1.0)).epsilon(1e-9));
    CHECK(oracle::cylinder_density(4, tau) == doctest::Approx(oracle::cylinder_density(4, 1.0)).epsilon(1e-9));
  }
}

TEST_CASE("density ordering flat > sphere > cylinder") {
  CHECK(1.0 > frozen::kSphereDensity3);
  CHECK(frozen::kSphereDensity3 > frozen::kCylinderDensity3);
}
