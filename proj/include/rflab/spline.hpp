#pragma once

#include <span>
#include <vector>

namespace rflab {

/// Natural cubic spline on a strictly increasing abscissa. Evaluation
/// outside the data range clamps to the end values.
class CubicSpline {
 public:
  struct Sample {
    double value;
    double d1;
    double d2;
  };

  CubicSpline() = default;
  CubicSpline(std::span<const double> x, std::span<const double> y);

  Sample eval(double x) const;
  /// Interval index i with x_i <= x < x_{i+1}, clamped to the table, and
  /// evaluation on a known interval (no clamping of x).
  std::size_t locate(double x) const;
  Sample eval_on(std::size_t i, double x) const;
  double operator()(double x) const { return eval(x).value; }
  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }
  bool empty() const { return x_.empty(); }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
};

/// Piecewise-linear interpolation on a strictly increasing abscissa with
/// clamping at both ends.
double lerp_table(std::span<const double> x, std::span<const double> y, double at);

}  // namespace rflab
