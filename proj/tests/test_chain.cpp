#include <doctest.h>

#include <cmath>
#include <limits>

#include "rflab/chain_minimizer.hpp"

using namespace rflab;

namespace {

LinkEnergy spring(double a, double b) { return {(b - a) * (b - a), -2.0 * (b - a), 2.0 * (b - a), 2.0, -2.0, 2.0}; }

}  // namespace

TEST_CASE("discrete Dirichlet energy is minimized by the straight line") {
  const std::size_t N = 20;
  std::vector<double> x0(N + 1, 0.0);
  x0.back() = 3.0;
  for (std::size_t j = 1; j < N; ++j) x0[j] = std::sin(0.7 * j);
  const std::vector<double> lo(N + 1, -1e9), hi(N + 1, 1e9);
  const ChainResult r = minimize_chain([](std::size_t, double a, double b) { return spring(a, b); }, x0, lo, hi);
  CHECK(r.converged);
  for (std::size_t j = 0; j <= N; ++j) CHECK(r.x[j] == doctest::Approx(3.0 * j / N).epsilon(1e-9));
  CHECK(r.value == doctest::Approx(9.0 / N));
}

TEST_CASE("bounds are respected") {
  const std::size_t N = 10;
  std::vector<double> x0(N + 1, 0.0);
  x0.back() = 2.0;
  std::vector<double> lo(N + 1, -1e9), hi(N + 1, 0.5);
  hi.back() = 2.0;
  const ChainResult r = minimize_chain([](std::size_t, double a, double b) { return spring(a, b); }, x0, lo, hi);
  for (std::size_t j = 1; j < N; ++j) CHECK(r.x[j] <= 0.5 + 1e-14);
}

TEST_CASE("chain energy sums links") {
  const std::vector<double> x{0.0, 1.0, 3.0};
  CHECK(chain_energy([](std::size_t, double a, double b) { return spring(a, b); }, x) == doctest::Approx(5.0));
}
