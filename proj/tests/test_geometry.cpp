#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rflab/geometry.hpp"
#include "rflab/solutions.hpp"

using namespace rflab;

namespace {

WarpedMetric round_sphere(int n, double r, std::size_t m) {
  WarpedMetric g;
  g.n = n;
  g.topology = Topology::SphereClosed;
  for (std::size_t i = 0; i < m; ++i) {
    const double s = std::numbers::pi * r * static_cast<double>(i) / static_cast<double>(m - 1);
    g.s.push_back(s);
    g.psi.push_back(r * std::sin(s / r));
  }
  g.psi.front() = 0.0;
  g.psi.back() = 0.0;
  return g;
}

}  // namespace

TEST_CASE("validate rejects broken grids") {
  WarpedMetric g = round_sphere(3, 1.0, 21);
  CHECK_NOTHROW(validate(g));
  WarpedMetric bad = g;
  bad.s[5] = bad.s[4];
  CHECK_THROWS_AS(validate(bad), InvalidMetric);
  bad = g;
  bad.psi[7] = -0.1;
  CHECK_THROWS_AS(validate(bad), InvalidMetric);
}

TEST_CASE("topology names round-trip") {
  for (Topology t : {Topology::SphereClosed, Topology::CylinderPeriodic, Topology::CylinderInfinite,
                     Topology::EuclideanFlat}) {
    CHECK(topology_from_string(to_string(t)) == t);
  }
}

TEST_CASE("norm convention matches plane counting") {
  for (int n = 2; n <= 6; ++n) {
    CHECK(riem_norm(n, 0.3, -1.7) == doctest::Approx(oracle::riem_from_planes(n, 0.3, -1.7)));
  }
}

TEST_CASE("round sphere curvature is constant") {
  const double r = 1.7;
  const WarpedMetric g = round_sphere(3, r, 801);
  const CurvatureField c = curvature_field(g);
  for (std::size_t i = 0; i < g.size(); i += 50) {
    CHECK(c.k_radial[i] == doctest::Approx(1.0 / (r * r)).epsilon(1e-4));
    CHECK(c.k_sphere[i] == doctest::Approx(1.0 / (r * r)).epsilon(1e-4));
    CHECK(c.scalar[i] == doctest::Approx(6.0 / (r * r)).epsilon(1e-4));
  }
}

TEST_CASE("round sphere volume") {
  for (int n : {2, 3, 4}) {
    const double r = 1.3;
    const WarpedMetric g = round_sphere(n, r, 2001);
    CHECK(total_volume(g) == doctest::Approx(oracle::sphere_area(n) * std::pow(r, n)).epsilon(1e-5));
    CHECK(unit_sphere_volume(n) == doctest::Approx(oracle::sphere_area(n)));
  }
}

TEST_CASE("meridian and antipodal distances") {
  const WarpedMetric g = round_sphere(3, 1.0, 401);
  CHECK(distance(g, {0.4, 0.0}, {1.9, 0.0}) == doctest::Approx(1.5).epsilon(1e-12));
  // Antipodal meridians through the pole.
  CHECK(distance(g, {0.4, 0.0}, {0.5, std::numbers::pi}) == doctest::Approx(0.9).epsilon(1e-9));
  // Points on the equator a quarter turn apart lie on a great circle.
  CHECK(distance(g, {0.5 * std::numbers::pi, 0.0}, {0.5 * std::numbers::pi, 0.5 * std::numbers::pi}) ==
        doctest::Approx(0.5 * std::numbers::pi).epsilon(1e-3));
}

TEST_CASE("property: distance is a metric on random triples") {
  const WarpedMetric g = round_sphere(3, 1.0, 401);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> us(0.05, std::numbers::pi - 0.05), ua(0.0, 2.0 * std::numbers::pi);
  for (int trial = 0; trial < 40; ++trial) {
    const OrbitPoint a{us(rng), ua(rng)}, b{us(rng), ua(rng)}, c{us(rng), ua(rng)};
    const double ab = distance(g, a, b), bc = distance(g, b, c), ac = distance(g, a, c);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(distance(g, b, a)).epsilon(1e-9));
    CHECK(ac <= ab + bc + 1e-6);
  }
}

TEST_CASE("metric text format round-trips") {
  WarpedMetric g = round_sphere(4, 2.0, 33);
  g.time = 0.25;
  std::stringstream ss;
  write_metric(ss, g);
  const WarpedMetric h = read_metric(ss);
  CHECK(h.n == 4);
  CHECK(h.topology == g.topology);
  CHECK(h.time == g.time);
  REQUIRE(h.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(h.s[i] == g.s[i]);
    CHECK(h.psi[i] == g.psi[i]);
  }
}
