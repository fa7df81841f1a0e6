#include "rflab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include "rflab/chain_minimizer.hpp"
#include "rflab/spline.hpp"

namespace rflab {

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::SphereClosed: return "SphereClosed";
    case Topology::CylinderPeriodic: return "CylinderPeriodic";
    case Topology::CylinderInfinite: return "CylinderInfinite";
    case Topology::EuclideanFlat: return "EuclideanFlat";
  }
  return "?";
}

Topology topology_from_string(std::string_view name) {
  for (Topology t : {Topology::SphereClosed, Topology::CylinderPeriodic, Topology::CylinderInfinite,
                     Topology::EuclideanFlat}) {
    if (to_string(t) == name) return t;
  }
  throw InvalidMetric("unknown topology: " + std::string(name));
}

double WarpedMetric::length() const {
  if (s.empty()) return 0.0;
  if (topology == Topology::CylinderPeriodic) return period;
  return s.back() - s.front();
}

bool WarpedMetric::has_pole_front() const {
  return topology == Topology::SphereClosed || topology == Topology::EuclideanFlat;
}

bool WarpedMetric::has_pole_back() const { return topology == Topology::SphereClosed; }

void validate(const WarpedMetric& metric, double grid_floor) {
  const std::size_t m = metric.size();
  if (metric.n < 3) throw InvalidMetric("dimension must be at least 3");
  if (m < 5) throw InvalidMetric("need at least 5 grid points");
  if (metric.psi.size() != m) throw InvalidMetric("s and psi differ in length");
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (!(metric.s[i + 1] - metric.s[i] >= grid_floor)) {
      throw InvalidMetric("grid not strictly increasing above the floor at index " + std::to_string(i));
    }
  }
  if (metric.topology == Topology::CylinderPeriodic &&
      !(metric.period - (metric.s.back() - metric.s.front()) >= grid_floor)) {
    throw InvalidMetric("period must exceed the grid extent");
  }
  const std::size_t first = metric.has_pole_front() ? 1 : 0;
  const std::size_t last = metric.has_pole_back() ? m - 1 : m;
  for (std::size_t i = first; i < last; ++i) {
    if (!(metric.psi[i] > 0.0) || !std::isfinite(metric.psi[i])) {
      throw InvalidMetric("psi must be positive at interior index " + std::to_string(i));
    }
  }
  const double scale = *std::max_element(metric.psi.begin(), metric.psi.end());
  if (metric.has_pole_front() && std::abs(metric.psi.front()) > 1e-9 * scale) {
    throw InvalidMetric("psi must vanish at the front pole");
  }
  if (metric.has_pole_back() && std::abs(metric.psi.back()) > 1e-9 * scale) {
    throw InvalidMetric("psi must vanish at the back pole");
  }
}

double riem_norm(int n, double kr, double ks) {
  const double nn = n;
  return std::sqrt(4.0 * (nn - 1.0) * kr * kr + 2.0 * (nn - 1.0) * (nn - 2.0) * ks * ks);
}

double scalar_curvature(int n, double kr, double ks) {
  const double nn = n;
  return 2.0 * (nn - 1.0) * kr + (nn - 1.0) * (nn - 2.0) * ks;
}

double scalar_to_riem_bound(int n) { return std::sqrt(n * (n - 1.0) / 2.0); }

double CurvatureField::sup_riem() const {
  return riem_norm.empty() ? 0.0 : *std::max_element(riem_norm.begin(), riem_norm.end());
}

double CurvatureField::sup_abs_ric() const {
  double best = 0.0;
  for (std::size_t i = 0; i < ric_radial.size(); ++i) {
    best = std::max({best, std::abs(ric_radial[i]), std::abs(ric_sphere[i])});
  }
  return best;
}

double CurvatureField::min_scalar() const {
  return scalar.empty() ? 0.0 : *std::min_element(scalar.begin(), scalar.end());
}

namespace {

struct Stencil3 {
  double wm, w0, wp;
};

Stencil3 second_derivative(double h0, double h1) {
  return {2.0 / (h0 * (h0 + h1)), -2.0 / (h0 * h1), 2.0 / (h1 * (h0 + h1))};
}

// Odd cubic psi ~ a r + b r^3 through two samples at distances r1 < r2
// from a pole; returns (psi_s, psi_sss) at the pole.
// Odd quintic a r + b r^3 + c r^5 through three samples at distances r_k from
// a pole (the odd ghost extension makes this the symmetric interpolant).
struct OddFit {
  double a = 0.0, b = 0.0, c = 0.0;
};

// Fornberg weights of the first derivative at x0 over five nodes.
std::array<double, 5> first_derivative_weights(double x0, const double* x) {
  double C[5][2] = {};
  C[0][0] = 1.0;
  double c1 = 1.0, c4 = x[0] - x0;
  for (int i = 1; i < 5; ++i) {
    const int mn = std::min(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) C[i][k] = c1 * (k * C[i - 1][k - 1] - c5 * C[i - 1][k]) / c2;
        C[i][0] = -c1 * c5 * C[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) C[j][k] = (c4 * C[j][k] - k * C[j][k - 1]) / c3;
      C[j][0] = c4 * C[j][0] / c3;
    }
    c1 = c2;
  }
  return {C[0][1], C[1][1], C[2][1], C[3][1], C[4][1]};
}

OddFit pole_fit(double r1, double y1, double r2, double y2, double r3, double y3) {
  // Divided differences of y/r in the variable r^2.
  const double x1 = r1 * r1, x2 = r2 * r2, x3 = r3 * r3;
  const double q1 = y1 / r1, q2 = y2 / r2, q3 = y3 / r3;
  const double d12 = (q2 - q1) / (x2 - x1), d23 = (q3 - q2) / (x3 - x2);
  OddFit f;
  f.c = (d23 - d12) / (x3 - x1);
  f.b = d12 - f.c * (x1 + x2);
  f.a = q1 - f.b * x1 - f.c * x1 * x1;
  return f;
}

}  // namespace

ProfileDerivatives profile_derivatives(const WarpedMetric& g) {
  const std::size_t m = g.size();
  ProfileDerivatives d{std::vector<double>(m), std::vector<double>(m)};
  const auto& s = g.s;
  const auto& y = g.psi;
  const bool periodic = g.topology == Topology::CylinderPeriodic;
  const long last = static_cast<long>(m) - 1;

  // Node j continued past the ends: periodic wrap, or odd reflection at a pole.
  // Returns false where no continuation exists (open ends).
  auto node = [&](long j, double& x, double& v) {
    if (j >= 0 && j <= last) {
      x = s[j];
      v = y[j];
      return true;
    }
    if (periodic) {
      const long w = ((j % static_cast<long>(m)) + static_cast<long>(m)) % static_cast<long>(m);
      x = s[w] + static_cast<double>((j - w) / static_cast<long>(m)) * g.period;
      v = y[w];
      return true;
    }
    if (j < 0 && g.has_pole_front()) {
      x = 2.0 * s[0] - s[-j];
      v = -y[-j];
      return true;
    }
    if (j > last && g.has_pole_back()) {
      x = 2.0 * s[last] - s[2 * last - j];
      v = -y[2 * last - j];
      return true;
    }
    return false;
  };

  // psi_s from five nodes (centred where the continuation allows, shifted
  // inward at open ends). Near a pole 1 - psi_s^2 ~ r^2, so psi_s needs an
  // error well below h^2 there; psi_ss keeps the three-point stencil.
  for (long i = 0; i <= last; ++i) {
    long first = i - 2;
    double xs[5], vs[5];
    bool ok = true;
    for (int k = 0; k < 5 && ok; ++k) ok = node(first + k, xs[k], vs[k]);
    if (!ok) {
      first = std::clamp<long>(i - 2, 0, last - 4);
      for (int k = 0; k < 5; ++k) node(first + k, xs[k], vs[k]);
    }
    const auto w = first_derivative_weights(s[i], xs);
    double acc = 0.0;
    for (int k = 0; k < 5; ++k) acc += w[k] * vs[k];
    d.d1[i] = acc;

    double xm, ym, xp, yp;
    if (node(i - 1, xm, ym) && node(i + 1, xp, yp)) {
      const Stencil3 b = second_derivative(s[i] - xm, xp - s[i]);
      d.d2[i] = b.wm * ym + b.w0 * y[i] + b.wp * yp;
    }
  }
  if (!periodic && !g.has_pole_front()) d.d2[0] = d.d2[1];
  if (!periodic && !g.has_pole_back()) d.d2[last] = d.d2[last - 1];

  // Pole entries hold psi_s and psi_sss of the odd quintic through three samples.
  if (g.has_pole_front()) {
    const OddFit f = pole_fit(s[1] - s[0], y[1], s[2] - s[0], y[2], s[3] - s[0], y[3]);
    d.d1[0] = f.a;
    d.d2[0] = 6.0 * f.b;
  }
  if (g.has_pole_back()) {
    const double e = s[last];
    const OddFit f = pole_fit(e - s[last - 1], y[last - 1], e - s[last - 2], y[last - 2], e - s[last - 3], y[last - 3]);
    // Distance runs backwards from the back pole: psi_s flips sign, psi_sss too.
    d.d1[last] = -f.a;
    d.d2[last] = -6.0 * f.b;
  }
  return d;
}

CurvatureField curvature_field(const WarpedMetric& g) {
  validate(g);
  const std::size_t m = g.size();
  const ProfileDerivatives d = profile_derivatives(g);
  CurvatureField c;
  c.scalar.resize(m);
  c.riem_norm.resize(m);
  c.ric_radial.resize(m);
  c.ric_sphere.resize(m);
  c.k_radial.resize(m);
  c.k_sphere.resize(m);
  const double nn = g.n;
  for (std::size_t i = 0; i < m; ++i) {
    const bool pole = (i == 0 && g.has_pole_front()) || (i == m - 1 && g.has_pole_back());
    double kr, ks;
    if (pole) {
      // L'Hopital: psi_ss/psi -> psi_sss/psi_s and (1-psi_s^2)/psi^2 -> the same limit.
      kr = -d.d2[i] / d.d1[i];
      ks = kr;
    } else {
      kr = -d.d2[i] / g.psi[i];
      ks = (1.0 - d.d1[i] * d.d1[i]) / (g.psi[i] * g.psi[i]);
    }
    c.k_radial[i] = kr;
    c.k_sphere[i] = ks;
    c.ric_radial[i] = (nn - 1.0) * kr;
    c.ric_sphere[i] = kr + (nn - 2.0) * ks;
    c.scalar[i] = scalar_curvature(g.n, kr, ks);
    c.riem_norm[i] = riem_norm(g.n, kr, ks);
  }
  return c;
}

double unit_sphere_volume(int k) {
  const double half = (k + 1) / 2.0;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double interpolate_psi(const WarpedMetric& g, double s) {
  if (g.topology == Topology::CylinderPeriodic) {
    const double s0 = g.s.front();
    double x = std::fmod(s - s0, g.period);
    if (x < 0) x += g.period;
    x += s0;
    if (x > g.s.back()) {
      const double w = (x - g.s.back()) / (s0 + g.period - g.s.back());
      return (1.0 - w) * g.psi.back() + w * g.psi.front();
    }
    return lerp_table(g.s, g.psi, x);
  }
  return lerp_table(g.s, g.psi, s);
}

double volume(const WarpedMetric& g, double a, double b) {
  if (!(b > a)) return 0.0;
  const double omega = unit_sphere_volume(g.n - 1);
  std::vector<double> xs(g.s), fs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) fs[i] = omega * std::pow(std::max(g.psi[i], 0.0), g.n - 1);
  if (g.topology == Topology::CylinderPeriodic) {
    // Tile the period until [a, b] is covered.
    const double s0 = g.s.front();
    const double shift = std::floor((a - s0) / g.period) * g.period;
    a -= shift;
    b -= shift;
    const int tiles = static_cast<int>(std::ceil((b - s0) / g.period)) + 1;
    std::vector<double> tx, tf;
    for (int k = 0; k < tiles; ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        tx.push_back(g.s[i] + k * g.period);
        tf.push_back(fs[i]);
      }
    }
    tx.push_back(s0 + tiles * g.period);
    tf.push_back(fs.front());
    xs = std::move(tx);
    fs = std::move(tf);
  }
  a = std::max(a, xs.front());
  b = std::min(b, xs.back());
  if (!(b > a)) return 0.0;
  auto f_at = [&](double x) { return lerp_table(xs, fs, x); };
  double acc = 0.0;
  double x_prev = a, f_prev = f_at(a);
  auto it = std::upper_bound(xs.begin(), xs.end(), a);
  for (; it != xs.end() && *it < b; ++it) {
    const double f = fs[static_cast<std::size_t>(it - xs.begin())];
    acc += 0.5 * (f_prev + f) * (*it - x_prev);
    x_prev = *it;
    f_prev = f;
  }
  acc += 0.5 * (f_prev + f_at(b)) * (b - x_prev);
  return acc;
}

double total_volume(const WarpedMetric& g) {
  if (g.topology == Topology::CylinderPeriodic) return volume(g, g.s.front(), g.s.front() + g.period);
  return volume(g, g.s.front(), g.s.back());
}

namespace {

double geodesic_in_angle(const WarpedMetric& g, double sp, double sq, double dtheta) {
  // Curve as a graph s(theta) over theta in [0, dtheta].
  const std::size_t links = 64;
  const CubicSpline psi_spline(g.s, g.psi);
  const double dth = dtheta / links;
  auto length = [&](double a, double b) {
    const double p = psi_spline(0.5 * (a + b));
    return std::sqrt((b - a) * (b - a) + p * p * dth * dth);
  };
  const double eps = 1e-6 * std::max(g.length(), 1.0);
  LinkFunction link = [&](std::size_t, double a, double b) {
    LinkEnergy e;
    e.value = length(a, b);
    e.ga = (length(a + eps, b) - length(a - eps, b)) / (2 * eps);
    e.gb = (length(a, b + eps) - length(a, b - eps)) / (2 * eps);
    e.haa = (length(a + eps, b) - 2 * e.value + length(a - eps, b)) / (eps * eps);
    e.hbb = (length(a, b + eps) - 2 * e.value + length(a, b - eps)) / (eps * eps);
    e.hab = (length(a + eps, b + eps) - length(a + eps, b - eps) - length(a - eps, b + eps) +
             length(a - eps, b - eps)) /
            (4 * eps * eps);
    return e;
  };
  std::vector<double> x(links + 1), lo(links + 1, g.s.front()), hi(links + 1, g.s.back());
  for (std::size_t j = 0; j <= links; ++j) x[j] = sp + (sq - sp) * static_cast<double>(j) / links;
  ChainOptions opt;
  opt.gradient_tolerance = 1e-9;
  return minimize_chain(link, x, lo, hi, opt).value;
}

}  // namespace

double distance(const WarpedMetric& g, OrbitPoint p, OrbitPoint q) {
  validate(g);
  double dtheta = std::fmod(std::abs(p.angle - q.angle), 2.0 * std::numbers::pi);
  if (dtheta > std::numbers::pi) dtheta = 2.0 * std::numbers::pi - dtheta;
  double ds = std::abs(q.s - p.s);
  if (g.topology == Topology::CylinderPeriodic) ds = std::min(ds, g.period - std::fmod(ds, g.period));
  if (dtheta < 1e-14) return ds;

  double best = std::numeric_limits<double>::infinity();
  if (g.has_pole_front()) best = std::min(best, (p.s - g.s.front()) + (q.s - g.s.front()));
  if (g.has_pole_back()) best = std::min(best, (g.s.back() - p.s) + (g.s.back() - q.s));
  if (std::abs(dtheta - std::numbers::pi) < 1e-14 && best < std::numeric_limits<double>::infinity()) {
    // Antipodal meridians: a minimizing curve stays in the great 2-sphere of
    // the two meridians and must cross a pole.
    return best;
  }
  return std::min(best, geodesic_in_angle(g, p.s, q.s, dtheta));
}

void write_metric(std::ostream& os, const WarpedMetric& g) {
  os << "# warped metric ds^2 + psi(s)^2 g_S^{n-1}\n";
  os << "n " << g.n << "\n";
  os << "topology " << to_string(g.topology) << "\n";
  os << std::setprecision(17);
  os << "time " << g.time << "\n";
  if (g.topology == Topology::CylinderPeriodic) os << "period " << g.period << "\n";
  os << "# s psi\n";
  for (std::size_t i = 0; i < g.size(); ++i) os << g.s[i] << " " << g.psi[i] << "\n";
}

WarpedMetric read_metric(std::istream& is) {
  WarpedMetric g;
  bool have_n = false, have_topology = false;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "n") {
      ls >> g.n;
      have_n = true;
    } else if (first == "topology") {
      std::string name;
      ls >> name;
      g.topology = topology_from_string(name);
      have_topology = true;
    } else if (first == "time") {
      ls >> g.time;
    } else if (first == "period") {
      ls >> g.period;
    } else {
      double s = 0, psi = 0;
      std::istringstream row(line);
      if (!(row >> s >> psi)) throw InvalidMetric("malformed metric row: " + line);
      g.s.push_back(s);
      g.psi.push_back(psi);
    }
    if (ls.fail()) throw InvalidMetric("malformed header line: " + line);
  }
  if (!have_n || !have_topology) throw InvalidMetric("metric header needs n and topology");
  validate(g);
  return g;
}

}  // namespace rflab
