#pragma once

#include <cmath>
#include <functional>
#include <numbers>

// Closed-form and quadrature references that share no code with the library.
namespace oracle {

inline double sphere_area(int k) {
  // |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

// Composite Simpson on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 4000) {
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

// Reduced volume of a constant-potential round sphere S^n of radius^2
// 2(n-1) tau, integrated along the meridian.
inline double sphere_density(int n, double tau = 0.37) {
  const double r = std::sqrt(2.0 * (n - 1) * tau);
  const double fiber = sphere_area(n - 1);
  const double vol = simpson([&](double s) { return fiber * std::pow(r * std::sin(s / r), n - 1); }, 0.0,
                             std::numbers::pi * r);
  return std::pow(4.0 * std::numbers::pi * tau, -0.5 * n) * std::exp(-0.5 * n) * vol;
}

// Reduced volume of R x S^{n-1} with fiber radius^2 2(n-2) tau and
// potential x^2/(4 tau) + (n-1)/2, Gaussian integral done by quadrature.
inline double cylinder_density(int n, double tau = 0.37) {
  const double rf = std::sqrt(2.0 * (n - 2) * tau);
  const double fiber = sphere_area(n - 1) * std::pow(rf, n - 1);
  const double w = 40.0 * std::sqrt(tau);
  const double axis = simpson([&](double x) { return std::exp(-x * x / (4.0 * tau)); }, -w, w);
  return std::pow(4.0 * std::numbers::pi * tau, -0.5 * n) * std::exp(-0.5 * (n - 1)) * fiber * axis;
}

// |Rm| as 2 sqrt(sum over coordinate planes of K^2), counted plane by plane
// for a warped product: n-1 planes contain the axis, the rest are fiber
// planes.
inline double riem_from_planes(int n, double k_axis, double k_fiber) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) sum += (i == 0 ? k_axis * k_axis : k_fiber * k_fiber);
  }
  return 2.0 * std::sqrt(sum);
}

// Type I products (T - t)|Rm| of the round shrinkers.
inline double sphere_rate(int n) {
  const double tau = 0.5;
  const double k = 1.0 / (2.0 * (n - 1) * tau);
  return tau * riem_from_planes(n, k, k);
}
inline double cylinder_rate(int n) {
  const double tau = 0.5;
  return tau * riem_from_planes(n, 0.0, 1.0 / (2.0 * (n - 2) * tau));
}

}  // namespace oracle

// Values produced by the oracles above, frozen.
namespace frozen {
inline constexpr double kSphereDensity3 = 0.79097582321649785;    // 2 sqrt(pi) e^{-3/2}
inline constexpr double kCylinderDensity3 = 0.73575888234288467;  // 2/e
inline constexpr double kSphereRate3 = 0.86602540378443865;       // sqrt(12)/4
inline constexpr double kCylinderRate3 = 1.0;
}  // namespace frozen
