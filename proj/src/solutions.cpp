#include "rflab/solutions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rflab {

std::string_view to_string(ExactFamily f) {
  switch (f) {
    case ExactFamily::ShrinkingSphere: return "sphere";
    case ExactFamily::ShrinkingCylinder: return "cylinder";
    case ExactFamily::GaussianFlat: return "gaussian";
  }
  return "?";
}

ExactFamily family_from_name(std::string_view name) {
  if (name == "sphere") return ExactFamily::ShrinkingSphere;
  if (name == "cylinder") return ExactFamily::ShrinkingCylinder;
  if (name == "gaussian") return ExactFamily::GaussianFlat;
  throw std::invalid_argument("unknown exact family: " + std::string(name));
}

ExactFlow make_exact_flow(ExactFamily family, int n, double singular_time) {
  if (n < 3) throw UnsupportedDimension("exact flows need n >= 3, got " + std::to_string(n));
  if (!(singular_time > 0.0)) throw std::invalid_argument("singular time must be positive");
  ExactFlow f;
  f.family = family;
  f.n = n;
  f.singular_time = singular_time;
  return f;
}

double ExactFlow::radius(double t) const {
  const double tau = singular_time - t;
  switch (family) {
    case ExactFamily::ShrinkingSphere: return std::sqrt(2.0 * (n - 1) * tau);
    case ExactFamily::ShrinkingCylinder: return std::sqrt(2.0 * (n - 2) * tau);
    case ExactFamily::GaussianFlat: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

WarpedMetric ExactFlow::evaluate(double t, std::size_t points) const {
  WarpedMetric g;
  g.n = n;
  g.time = t;
  g.s.resize(points);
  g.psi.resize(points);
  switch (family) {
    case ExactFamily::ShrinkingSphere: {
      const double r = radius(t);
      g.topology = Topology::SphereClosed;
      for (std::size_t i = 0; i < points; ++i) {
        const double theta = std::numbers::pi * static_cast<double>(i) / static_cast<double>(points - 1);
        g.s[i] = r * theta;
        g.psi[i] = r * std::sin(theta);
      }
      g.psi.front() = 0.0;
      g.psi.back() = 0.0;
      break;
    }
    case ExactFamily::ShrinkingCylinder: {
      const double r = radius(t);
      g.topology = Topology::CylinderPeriodic;
      g.period = cylinder_period;
      for (std::size_t i = 0; i < points; ++i) {
        g.s[i] = -0.5 * cylinder_period + cylinder_period * static_cast<double>(i) / static_cast<double>(points);
        g.psi[i] = r;
      }
      break;
    }
    case ExactFamily::GaussianFlat: {
      g.topology = Topology::EuclideanFlat;
      for (std::size_t i = 0; i < points; ++i) {
        g.s[i] = flat_radius * static_cast<double>(i) / static_cast<double>(points - 1);
        g.psi[i] = g.s[i];
      }
      break;
    }
  }
  return g;
}

double ExactFlow::material_label(double s, double t) const {
  if (family == ExactFamily::ShrinkingSphere) return s * radius(0.0) / radius(t);
  return s;
}

double ExactFlow::sup_riem(double t) const {
  const double tau = singular_time - t;
  switch (family) {
    case ExactFamily::ShrinkingSphere: {
      const double k = 1.0 / (2.0 * (n - 1) * tau);
      return riem_norm(n, k, k);
    }
    case ExactFamily::ShrinkingCylinder: return riem_norm(n, 0.0, 1.0 / (2.0 * (n - 2) * tau));
    case ExactFamily::GaussianFlat: return 0.0;
  }
  return 0.0;
}

double ExactFlow::scalar(double t) const {
  const double tau = singular_time - t;
  switch (family) {
    case ExactFamily::ShrinkingSphere: return n / (2.0 * tau);
    case ExactFamily::ShrinkingCylinder: return (n - 1) / (2.0 * tau);
    case ExactFamily::GaussianFlat: return 0.0;
  }
  return 0.0;
}

SolitonStructure soliton_potential(const ExactFlow& flow, double t, std::size_t points) {
  SolitonStructure st;
  st.metric = flow.evaluate(t, points);
  st.singular_time = flow.singular_time;
  const double tau = flow.singular_time - t;
  const std::size_t m = st.metric.size();
  st.potential.resize(m);
  st.potential_rate.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = st.metric.s[i];
    switch (flow.family) {
      case ExactFamily::ShrinkingSphere:
        st.potential[i] = flow.n / 2.0;
        st.potential_rate[i] = 0.0;
        break;
      case ExactFamily::ShrinkingCylinder:
        st.potential[i] = x * x / (4.0 * tau) + (flow.n - 1) / 2.0;
        st.potential_rate[i] = x * x / (4.0 * tau * tau);
        break;
      case ExactFamily::GaussianFlat:
        st.potential[i] = x * x / (4.0 * tau);
        st.potential_rate[i] = x * x / (4.0 * tau * tau);
        break;
    }
  }
  return st;
}

SolitonStructure soliton_potential(ExactFamily family, int n, double singular_time, double t,
                                   std::size_t points) {
  return soliton_potential(make_exact_flow(family, n, singular_time), t, points);
}

namespace {

// Derivatives of a function that is even about every pole. Periodic axes are
// treated as windows of the infinite axis (one-sided at the ends).
void even_derivatives(const WarpedMetric& g, const std::vector<double>& f, std::vector<double>& d1,
                      std::vector<double>& d2) {
  const std::size_t m = g.size();
  const auto& s = g.s;
  d1.assign(m, 0.0);
  d2.assign(m, 0.0);
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double h0 = s[i] - s[i - 1], h1 = s[i + 1] - s[i];
    d1[i] = -h1 / (h0 * (h0 + h1)) * f[i - 1] + (h1 - h0) / (h0 * h1) * f[i] + h0 / (h1 * (h0 + h1)) * f[i + 1];
    d2[i] = 2.0 * (f[i - 1] / (h0 * (h0 + h1)) - f[i] / (h0 * h1) + f[i + 1] / (h1 * (h0 + h1)));
  }
  auto one_sided = [&](std::size_t i, std::size_t a, std::size_t b) {
    // Quadratic through (i, a, b).
    const double x0 = s[i], x1 = s[a], x2 = s[b];
    const double y0 = f[i], y1 = f[a], y2 = f[b];
    const double dd1 = (y1 - y0) / (x1 - x0), dd2 = (y2 - y1) / (x2 - x1);
    const double c2 = (dd2 - dd1) / (x2 - x0);
    d2[i] = 2.0 * c2;
    d1[i] = dd1 + c2 * (x0 - x1);
  };
  if (g.has_pole_front()) {
    const double h = s[1] - s[0];
    d1[0] = 0.0;
    d2[0] = 2.0 * (f[1] - f[0]) / (h * h);
  } else {
    one_sided(0, 1, 2);
  }
  if (g.has_pole_back()) {
    const double h = s[m - 1] - s[m - 2];
    d1[m - 1] = 0.0;
    d2[m - 1] = 2.0 * (f[m - 2] - f[m - 1]) / (h * h);
  } else {
    one_sided(m - 1, m - 2, m - 3);
  }
}

}  // namespace

SolitonResidual soliton_residual(const SolitonStructure& st) {
  const WarpedMetric& g = st.metric;
  const CurvatureField c = curvature_field(g);
  const ProfileDerivatives pd = profile_derivatives(g);
  std::vector<double> f1, f2;
  even_derivatives(g, st.potential, f1, f2);
  const double tau = st.singular_time - g.time;
  const std::size_t m = g.size();
  SolitonResidual r;
  r.equation_pointwise.resize(m);
  r.normalization_pointwise.resize(m);
  r.time_coupling_pointwise.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool pole = (i == 0 && g.has_pole_front()) || (i == m - 1 && g.has_pole_back());
    const double hess_radial = f2[i];
    const double hess_sphere = pole ? f2[i] : pd.d1[i] / g.psi[i] * f1[i];
    const double e1 = c.ric_radial[i] + hess_radial - 0.5 / tau;
    const double e2 = c.ric_sphere[i] + hess_sphere - 0.5 / tau;
    r.equation_pointwise[i] = std::max(std::abs(e1), std::abs(e2));
    r.normalization_pointwise[i] = std::abs(tau * (c.scalar[i] + f1[i] * f1[i]) - st.potential[i]);
    r.time_coupling_pointwise[i] = std::abs(st.potential_rate[i] - f1[i] * f1[i]);
    r.equation = std::max(r.equation, r.equation_pointwise[i]);
    r.normalization = std::max(r.normalization, r.normalization_pointwise[i]);
    r.time_coupling = std::max(r.time_coupling, r.time_coupling_pointwise[i]);
  }
  return r;
}

std::string_view to_string(RigidityVerdict v) {
  switch (v) {
    case RigidityVerdict::StrictlyPositiveR: return "StrictlyPositiveR";
    case RigidityVerdict::FlatGaussian: return "FlatGaussian";
    case RigidityVerdict::Violation: return "Violation";
  }
  return "?";
}

RigidityResult rigidity_probe(const SolitonStructure& st, double tolerance) {
  const CurvatureField c = curvature_field(st.metric);
  const double tau = st.singular_time - st.metric.time;
  RigidityResult out;
  out.min_scaled_scalar = c.min_scalar() * tau;
  out.max_scaled_riem = c.sup_riem() * tau;
  const SolitonResidual res = soliton_residual(st);
  if (tau * res.equation > kSolitonResidualTolerance || res.normalization > kSolitonResidualTolerance) {
    out.verdict = RigidityVerdict::Violation;
    return out;
  }
  if (out.min_scaled_scalar < -tolerance) {
    out.verdict = RigidityVerdict::Violation;
  } else if (out.min_scaled_scalar <= tolerance) {
    out.verdict = out.max_scaled_riem <= tolerance ? RigidityVerdict::FlatGaussian : RigidityVerdict::Violation;
  } else {
    out.verdict = RigidityVerdict::StrictlyPositiveR;
  }
  return out;
}

}  // namespace rflab
