#include "rflab/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace rflab {

CubicSpline::CubicSpline(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()), m_(x.size(), 0.0) {
  const std::size_t n = x_.size();
  if (n != y_.size() || n < 2) {
    throw std::invalid_argument("CubicSpline: need at least two matching samples");
  }
  if (n == 2) return;
  // Tridiagonal system for interior second derivatives (natural ends).
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double a = h0 / 6.0;
    const double b = (h0 + h1) / 3.0;
    const double cc = h1 / 6.0;
    const double rhs = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (rhs - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = d[i] - c[i] * m_[i + 1];
  }
}

CubicSpline::Sample CubicSpline::eval(double x) const {
  if (x <= x_.front()) {
    return {y_.front(), (y_[1] - y_[0]) / (x_[1] - x_[0]) - (x_[1] - x_[0]) * (2.0 * m_[0] + m_[1]) / 6.0,
            0.0};
  }
  if (x >= x_.back()) {
    const std::size_t n = x_.size();
    const double h = x_[n - 1] - x_[n - 2];
    return {y_.back(), (y_[n - 1] - y_[n - 2]) / h + h * (m_[n - 2] + 2.0 * m_[n - 1]) / 6.0, 0.0};
  }
  return eval_on(locate(x), x);
}

std::size_t CubicSpline::locate(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin(), 1)) - 1;
  return std::min(i, x_.size() - 2);
}

CubicSpline::Sample CubicSpline::eval_on(std::size_t i, double x) const {
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  const double value = a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  const double d1 = (y_[i + 1] - y_[i]) / h - (3.0 * a * a - 1.0) * h * m_[i] / 6.0 +
                    (3.0 * b * b - 1.0) * h * m_[i + 1] / 6.0;
  const double d2 = a * m_[i] + b * m_[i + 1];
  return {value, d1, d2};
}

double lerp_table(std::span<const double> x, std::span<const double> y, double at) {
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
  const double w = (at - x[i]) / (x[i + 1] - x[i]);
  return (1.0 - w) * y[i] + w * y[i + 1];
}

}  // namespace rflab
