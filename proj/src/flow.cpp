#include "rflab/flow.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rflab {

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::SingularityReached: return "singularity-reached";
    case RunStatus::ResolutionLimited: return "resolution-limited";
    case RunStatus::FinalTimeReached: return "final-time-reached";
    case RunStatus::StepUnderflow: return "step-underflow";
  }
  return "?";
}

namespace {

// Solver state on a uniform arclength grid s_i = origin + i * spacing().
// Axes with a pole evolve the slope psi_s (Dirichlet +-1 at the poles) and
// rebuild psi by quadrature; other axes evolve psi directly.
struct State {
  std::vector<double> psi;
  std::vector<double> slope;
  std::vector<double> label;
  double length = 0.0;  // axis length (period when periodic)
  double origin = 0.0;
  double time = 0.0;
  double closure = 0.0;  // psi defect at the back pole before correction
};

// Ghost rule past a non-periodic end: Odd reflects about the end value,
// Even mirrors the values.
enum class Parity { Odd, Even };

struct Resolved {
  int idx[2] = {0, 0};
  double f[2] = {0.0, 0.0};
  int count = 0;
};

class Discretization {
 public:
  Discretization(int n, Topology topo, std::size_t m) : n_(n), m_(static_cast<int>(m)) {
    periodic_ = topo == Topology::CylinderPeriodic;
    pole_front_ = topo == Topology::SphereClosed || topo == Topology::EuclideanFlat;
    pole_back_ = topo == Topology::SphereClosed;
    for (int i = 0; i < m_; ++i) {
      const bool fixed = !periodic_ && (i == 0 || i == m_ - 1);
      unknown_.push_back(fixed ? -1 : static_cast<int>(unknowns_.size()));
      if (!fixed) unknowns_.push_back(i);
    }
  }

  int m() const { return m_; }
  int n() const { return n_; }
  bool periodic() const { return periodic_; }
  bool slope_form() const { return pole_front_; }
  bool pole_front() const { return pole_front_; }
  bool pole_back() const { return pole_back_; }
  double spacing(double length) const { return periodic_ ? length / m_ : length / (m_ - 1); }

  Parity psi_parity() const { return Parity::Odd; }
  Parity slope_parity_front() const { return pole_front_ ? Parity::Even : Parity::Odd; }
  Parity slope_parity_back() const { return pole_back_ ? Parity::Even : Parity::Odd; }

  Resolved resolve(int j, Parity front, Parity back) const {
    Resolved r;
    r.count = 1;
    r.f[0] = 1.0;
    const int last = m_ - 1;
    if (j >= 0 && j <= last) {
      r.idx[0] = j;
    } else if (periodic_) {
      r.idx[0] = ((j % m_) + m_) % m_;
    } else {
      const bool lo = j < 0;
      const int end = lo ? 0 : last;
      r.idx[0] = lo ? -j : 2 * last - j;
      if ((lo ? front : back) == Parity::Odd) {
        r.f[0] = -1.0;
        r.idx[1] = end;
        r.f[1] = 2.0;
        r.count = 2;
      }
    }
    return r;
  }

  double value(const std::vector<double>& v, int j, Parity front, Parity back) const {
    const Resolved r = resolve(j, front, back);
    double out = 0.0;
    for (int k = 0; k < r.count; ++k) out += r.f[k] * v[r.idx[k]];
    return out;
  }

  // Fourth-order centred first and second derivatives at node i.
  void derivatives(const std::vector<double>& v, int i, double h, Parity front, Parity back, double& d1,
                   double& d2) const {
    const double vm2 = value(v, i - 2, front, back), vm1 = value(v, i - 1, front, back), v0 = v[i];
    const double vp1 = value(v, i + 1, front, back), vp2 = value(v, i + 2, front, back);
    d1 = (-vp2 + 8.0 * vp1 - 8.0 * vm1 + vm2) / (12.0 * h);
    d2 = (-vp2 + 16.0 * vp1 - 30.0 * v0 + 16.0 * vm1 - vm2) / (12.0 * h * h);
  }

  // psi_ss / psi per node; at poles the even limit is extrapolated.
  std::vector<double> radial_ratio(const State& st) const {
    const double h = spacing(st.length);
    std::vector<double> ratio(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      if ((i == 0 && pole_front_) || (i == m_ - 1 && pole_back_)) continue;
      double d1, d2;
      if (slope_form()) {
        derivatives(st.slope, i, h, slope_parity_front(), slope_parity_back(), d1, d2);
        ratio[i] = d1 / st.psi[i];
      } else {
        derivatives(st.psi, i, h, Parity::Odd, Parity::Odd, d1, d2);
        ratio[i] = d2 / st.psi[i];
      }
    }
    if (pole_front_) ratio[0] = (4.0 * ratio[1] - ratio[2]) / 3.0;
    if (pole_back_) ratio[m_ - 1] = (4.0 * ratio[m_ - 2] - ratio[m_ - 3]) / 3.0;
    return ratio;
  }

  // Rebuilds psi from the slope with fourth-order cell quadrature. On a
  // closed axis the back-pole defect is removed with a weight whose
  // derivative vanishes at both poles, so pole slopes are untouched.
  void rebuild_psi(State& st) const {
    const double h = spacing(st.length);
    const Parity pf = slope_parity_front(), pb = slope_parity_back();
    st.psi.assign(m_, 0.0);
    for (int j = 0; j + 1 < m_; ++j) {
      const double cell = h *
                          (-value(st.slope, j - 1, pf, pb) + 13.0 * st.slope[j] + 13.0 * st.slope[j + 1] -
                           value(st.slope, j + 2, pf, pb)) /
                          24.0;
      st.psi[j + 1] = st.psi[j] + cell;
    }
    st.closure = 0.0;
    if (pole_back_) {
      const double defect = st.psi[m_ - 1];
      st.closure = defect;
      for (int i = 0; i < m_; ++i) {
        const double u = static_cast<double>(i) / (m_ - 1);
        st.psi[i] -= defect * (u - std::sin(2.0 * std::numbers::pi * u) / (2.0 * std::numbers::pi));
      }
      st.psi[m_ - 1] = 0.0;
    }
  }

  // One linearly implicit Euler step of the evolved field at material
  // points, (I - dt J) delta = dt F. Returns false if the result leaves the
  // admissible set.
  bool implicit_step(const State& st, double dt, std::vector<double>& out) const {
    const bool sf = slope_form();
    const std::vector<double>& v = sf ? st.slope : st.psi;
    const Parity pf = sf ? slope_parity_front() : Parity::Odd;
    const Parity pb = sf ? slope_parity_back() : Parity::Odd;
    const double h = spacing(st.length);
    const std::size_t nu = unknowns_.size();
    std::vector<double> rhs(nu);
    const double w1[5] = {1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0};
    const double w2[5] = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0};

    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<double> band;
    const bool use_band = !periodic_;
    if (use_band) band.assign(nu * 5, 0.0);
    else triplets.reserve(nu * 7);

    const double nm2 = n_ - 2, nm3 = n_ - 3;
    for (std::size_t r = 0; r < nu; ++r) {
      const int i = unknowns_[r];
      double d1, d2;
      derivatives(v, i, h, pf, pb, d1, d2);
      const double p = st.psi[i];
      double f, diag, adv;
      if (sf) {
        // a_t = a_ss + (n-3) a a_s / psi + (n-2) a (1 - a^2) / psi^2
        const double a = v[i];
        f = d2 + nm3 * a * d1 / p + nm2 * a * (1.0 - a * a) / (p * p);
        diag = nm3 * d1 / p + nm2 * (1.0 - 3.0 * a * a) / (p * p);
        adv = nm3 * a / p;
      } else {
        // psi_t = psi_ss - (n-2)(1 - psi_s^2) / psi
        f = d2 + nm2 * (d1 * d1 - 1.0) / p;
        diag = nm2 * (1.0 - d1 * d1) / (p * p);
        adv = 2.0 * nm2 * d1 / p;
      }
      rhs[r] = dt * f;
      auto add = [&](int col_node, double coef) {
        const int c = unknown_[col_node];
        if (c < 0) return;
        if (use_band) band[r * 5 + static_cast<std::size_t>(c - static_cast<int>(r) + 2)] += coef;
        else triplets.emplace_back(static_cast<int>(r), c, coef);
      };
      add(i, 1.0 - dt * diag);
      for (int k = -2; k <= 2; ++k) {
        const double coef = -dt * (w2[k + 2] / (h * h) + adv * w1[k + 2] / h);
        if (coef == 0.0) continue;
        const Resolved res = resolve(i + k, pf, pb);
        for (int q = 0; q < res.count; ++q) add(res.idx[q], coef * res.f[q]);
      }
    }

    std::vector<double> delta(nu);
    if (use_band) {
      if (!solve_band(band, rhs, delta)) return false;
    } else {
      Eigen::SparseMatrix<double> A(static_cast<int>(nu), static_cast<int>(nu));
      A.setFromTriplets(triplets.begin(), triplets.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(A);
      if (lu.info() != Eigen::Success) return false;
      Eigen::Map<Eigen::VectorXd> b(rhs.data(), static_cast<int>(nu));
      Eigen::VectorXd x = lu.solve(b);
      if (lu.info() != Eigen::Success) return false;
      for (std::size_t r = 0; r < nu; ++r) delta[r] = x[static_cast<int>(r)];
    }
    out = v;
    for (std::size_t r = 0; r < nu; ++r) {
      const double val = v[unknowns_[r]] + delta[r];
      if (!std::isfinite(val) || (!sf && !(val > 0.0))) return false;
      out[unknowns_[r]] = val;
    }
    return true;
  }

 private:
  // Pentadiagonal LU without pivoting.
  static bool solve_band(std::vector<double>& a, std::vector<double> b, std::vector<double>& x) {
    const std::size_t N = b.size();
    auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * 5 + (c + 2 - r)]; };
    for (std::size_t i = 0; i < N; ++i) {
      const double piv = at(i, i);
      if (!(std::abs(piv) > 1e-300) || !std::isfinite(piv)) return false;
      for (std::size_t r = i + 1; r <= std::min(i + 2, N - 1); ++r) {
        const double f = at(r, i) / piv;
        if (f == 0.0) continue;
        for (std::size_t c = i; c <= std::min(i + 2, N - 1); ++c) at(r, c) -= f * at(i, c);
        b[r] -= f * b[i];
      }
    }
    x.assign(N, 0.0);
    for (std::size_t ii = N; ii-- > 0;) {
      double acc = b[ii];
      for (std::size_t c = ii + 1; c <= std::min(ii + 2, N - 1); ++c) acc -= at(ii, c) * x[c];
      x[ii] = acc / at(ii, ii);
    }
    return true;
  }

  int n_;
  int m_;
  bool periodic_ = false;
  bool pole_front_ = false;
  bool pole_back_ = false;
  std::vector<int> unknown_;
  std::vector<int> unknowns_;
};

// Cubic Lagrange interpolation of values v at increasing positions x. Past
// the ends of a non-periodic axis positions are reflected about the end node
// and values follow the given parity.
double cubic_at(const std::vector<double>& x, const std::vector<double>& v, double y, bool periodic,
                double period, Parity front = Parity::Odd, Parity back = Parity::Odd) {
  const int m = static_cast<int>(x.size());
  const int last = m - 1;
  auto pos = [&](int j) {
    if (periodic) {
      const int w = ((j % m) + m) % m;
      return x[w] + ((j - w) / m) * period;
    }
    if (j < 0) return 2.0 * x[0] - x[-j];
    if (j > last) return 2.0 * x[last] - x[2 * last - j];
    return x[j];
  };
  auto val = [&](int j) {
    if (periodic) return v[((j % m) + m) % m];
    if (j < 0) return front == Parity::Odd ? 2.0 * v[0] - v[-j] : v[-j];
    if (j > last) return back == Parity::Odd ? 2.0 * v[last] - v[2 * last - j] : v[2 * last - j];
    return v[j];
  };
  if (periodic) {
    while (y < x[0]) y += period;
    while (y >= x[0] + period) y -= period;
  }
  int k = static_cast<int>(std::upper_bound(x.begin(), x.end(), y) - x.begin()) - 1;
  if (!periodic) k = std::clamp(k, 0, last - 1);
  double out = 0.0;
  for (int a = k - 1; a <= k + 2; ++a) {
    double w = 1.0;
    for (int b = k - 1; b <= k + 2; ++b) {
      if (b != a) w *= (y - pos(b)) / (pos(a) - pos(b));
    }
    out += w * val(a);
  }
  return out;
}

// One step of size dt from `st`, followed by regridding to uniform arclength.
bool advance(const Discretization& disc, const State& st, double dt, double label_period, State& out) {
  const int m = disc.m();
  const bool periodic = disc.periodic();
  const bool sf = disc.slope_form();
  const double h = disc.spacing(st.length);
  std::vector<double> field;
  if (!disc.implicit_step(st, dt, field)) return false;

  // Material segments stretch by d(ell)/dt = (n-1)(psi_ss/psi) ell.
  const std::vector<double> ratio = disc.radial_ratio(st);
  const int nseg = periodic ? m : m - 1;
  std::vector<double> x(m);
  x[0] = st.origin;
  double end = st.origin;
  for (int j = 0; j < nseg; ++j) {
    const double mean = 0.5 * (ratio[j] + ratio[(j + 1) % m]);
    end += h * std::exp(dt * (disc.n() - 1) * mean);
    if (j + 1 < m) x[j + 1] = end;
  }
  const double length = end - st.origin;
  if (!(length > 0.0) || !std::isfinite(length)) return false;

  out.time = st.time + dt;
  out.origin = st.origin;
  out.length = length;
  std::vector<double>& target = sf ? out.slope : out.psi;
  target.assign(m, 0.0);
  out.label.assign(m, 0.0);
  const Parity pf = sf ? disc.slope_parity_front() : Parity::Odd;
  const Parity pb = sf ? disc.slope_parity_back() : Parity::Odd;
  const double hn = disc.spacing(length);
  // Periodic labels are unwrapped; interpolate their periodic part.
  std::vector<double> label_part = st.label;
  if (periodic) {
    for (int j = 0; j < m; ++j) label_part[j] -= (x[j] - st.origin) * label_period / length;
  }
  for (int i = 0; i < m; ++i) {
    const double si = st.origin + i * hn;
    if (!periodic && (i == 0 || i == m - 1)) {
      target[i] = field[i];
      out.label[i] = st.label[i];
      continue;
    }
    target[i] = cubic_at(x, field, si, periodic, length, pf, pb);
    out.label[i] = cubic_at(x, label_part, si, periodic, length);
    if (periodic) out.label[i] += (si - st.origin) * label_period / length;
  }
  if (sf) {
    disc.rebuild_psi(out);
  }
  for (int i = 0; i < m; ++i) {
    const bool pole = (i == 0 && disc.pole_front()) || (i == m - 1 && disc.pole_back());
    if (pole) continue;
    if (!(out.psi[i] > 0.0) || !std::isfinite(out.psi[i])) return false;
  }
  return true;
}

WarpedMetric to_metric(const State& st, int n, Topology topo, const Discretization& disc) {
  WarpedMetric g;
  g.n = n;
  g.topology = topo;
  g.time = st.time;
  g.psi = st.psi;
  const int m = disc.m();
  g.s.resize(m);
  const double h = disc.spacing(st.length);
  for (int i = 0; i < m; ++i) g.s[i] = st.origin + i * h;
  if (topo == Topology::CylinderPeriodic) g.period = st.length;
  return g;
}

double interior_neck(const State& st, const Discretization& disc) {
  // Smallest strict interior local minimum of psi, or +inf.
  const int m = disc.m();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i + 1 < m; ++i) {
    const double p = st.psi[i];
    if (p <= st.psi[i - 1] && p <= st.psi[i + 1] && (p < st.psi[i - 1] || p < st.psi[i + 1])) {
      best = std::min(best, p);
    }
  }
  return best;
}

}  // namespace

FlowHistory evolve(const WarpedMetric& initial, const FlowConfig& config) {
  validate(initial, config.grid_floor);
  if (initial.n < 3) throw UnsupportedDimension("flow needs n >= 3");
  if (initial.size() < 8) throw InvalidMetric("flow needs at least 8 grid points");
  const auto wall_start = std::chrono::steady_clock::now();
  const int n = initial.n;
  const Topology topo = initial.topology;
  const std::size_t m = initial.size();
  const Discretization disc(n, topo, m);

  FlowHistory hist;
  hist.push(initial, initial.s);

  // Resample onto a uniform grid when the input is not uniform already.
  State st;
  st.time = initial.time;
  st.origin = initial.s.front();
  st.length = topo == Topology::CylinderPeriodic ? initial.period : initial.length();
  st.psi.resize(m);
  st.label.resize(m);
  {
    const double h = disc.spacing(st.length);
    for (std::size_t i = 0; i < m; ++i) {
      const double si = st.origin + static_cast<double>(i) * h;
      st.label[i] = si;
      st.psi[i] = cubic_at(initial.s, initial.psi, si, disc.periodic(), st.length);
    }
    if (topo == Topology::CylinderInfinite) {
      st.psi.front() = initial.psi.front();
      st.psi.back() = initial.psi.back();
    }
    if (disc.slope_form()) {
      st.slope.assign(m, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        double d1, d2;
        disc.derivatives(st.psi, static_cast<int>(i), h, Parity::Odd, Parity::Odd, d1, d2);
        st.slope[i] = d1;
      }
      st.slope.front() = 1.0;
      if (disc.pole_back()) st.slope.back() = -1.0;
      disc.rebuild_psi(st);
    }
  }
  const double label_period = st.length;

  double record_interval = config.record_interval;
  if (std::isfinite(config.final_time)) {
    record_interval = std::min(record_interval, (config.final_time - initial.time) / 32.0);
  }
  const double decade_step = 1.0 / std::max(1, config.snapshots_per_decade);

  double sup = hist.curvatures.back().sup_riem();
  double last_log = std::log10(std::max(sup, 1e-300));
  double last_record_time = st.time;
  double dt = sup > 0.0 ? 1e-3 * config.sigma / sup : 1e-3;
  if (std::isfinite(config.final_time)) dt = std::min(dt, 1e-3 * (config.final_time - st.time));
  SolverDiagnostics& diag = hist.diagnostics;
  diag.min_step = std::numeric_limits<double>::infinity();
  diag.max_step = 0.0;
  hist.status = RunStatus::FinalTimeReached;

  auto record = [&](const State& s) {
    hist.push(to_metric(s, n, topo, disc), s.label);
    last_record_time = s.time;
    last_log = std::log10(std::max(hist.curvatures.back().sup_riem(), 1e-300));
  };

  State full, half1, half2;
  long steps = 0;
  for (;;) {
    if (steps++ > config.max_steps) throw SolverInstability("step budget exhausted at t = " + std::to_string(st.time));
    if (std::isfinite(config.final_time) && st.time >= config.final_time - 1e-14 * std::max(1.0, config.final_time)) {
      hist.status = RunStatus::FinalTimeReached;
      break;
    }
    if (sup > 0.0) dt = std::min(dt, config.sigma / sup);
    if (std::isfinite(config.final_time)) dt = std::min(dt, config.final_time - st.time);
    if (dt < config.min_step) {
      hist.status = RunStatus::StepUnderflow;
      break;
    }

    bool ok = advance(disc, st, dt, label_period, full) && advance(disc, st, 0.5 * dt, label_period, half1) &&
              advance(disc, half1, 0.5 * dt, label_period, half2);
    double err = std::numeric_limits<double>::infinity();
    if (ok) {
      const double hf = disc.spacing(full.length);
      err = std::abs(half2.length - full.length) / full.length;
      for (std::size_t i = 0; i < m; ++i) {
        const double scale = std::abs(half2.psi[i]) + hf;
        err = std::max(err, std::abs(half2.psi[i] - full.psi[i]) / scale);
        if (disc.slope_form()) err = std::max(err, std::abs(half2.slope[i] - full.slope[i]));
      }
      err /= config.tolerance;
    } else if (sup > 0.0 && dt * sup < 1e-6) {
      std::ostringstream msg;
      msg << "non-positive or non-finite psi at t = " << st.time << " with dt = " << dt << ", sup|Rm| = " << sup
          << ", accepted steps = " << diag.accepted_steps;
      throw SolverInstability(msg.str());
    }
    if (!(err <= 1.0)) {
      ++diag.rejected_steps;
      dt *= ok ? std::clamp(0.9 / std::sqrt(err), 0.1, 0.5) : 0.25;
      continue;
    }

    // Richardson extrapolation of the two solutions.
    State next = half2;
    next.length = 2.0 * half2.length - full.length;
    for (std::size_t i = 0; i < m; ++i) {
      if (disc.slope_form()) next.slope[i] = 2.0 * half2.slope[i] - full.slope[i];
      else next.psi[i] = 2.0 * half2.psi[i] - full.psi[i];
      next.label[i] = 2.0 * half2.label[i] - full.label[i];
    }
    if (disc.slope_form()) disc.rebuild_psi(next);
    bool admissible = next.length > 0.0;
    for (std::size_t i = 0; i < m && admissible; ++i) {
      const bool pole = (i == 0 && disc.pole_front()) || (i == m - 1 && disc.pole_back());
      if (!pole && !(next.psi[i] > 0.0)) admissible = false;
    }
    if (!admissible) next = half2;

    ++diag.accepted_steps;
    diag.min_step = std::min(diag.min_step, dt);
    diag.max_step = std::max(diag.max_step, dt);
    st = std::move(next);
    const CurvatureField c = curvature_field(to_metric(st, n, topo, disc));
    sup = c.sup_riem();
    dt *= std::clamp(0.9 / std::sqrt(std::max(err, 1e-12)), 0.2, 4.0);

    const double lg = std::log10(std::max(sup, 1e-300));
    const bool stop_curv = sup >= config.stop_curvature;
    const bool stop_res = config.resolution_cells > 0.0 &&
                          interior_neck(st, disc) < config.resolution_cells * disc.spacing(st.length);
    const bool final = std::isfinite(config.final_time) && st.time >= config.final_time - 1e-14 * std::max(1.0, config.final_time);
    if (std::abs(lg - last_log) >= decade_step - 1e-12 || st.time - last_record_time >= record_interval || stop_curv ||
        stop_res || final) {
      record(st);
    }
    if (stop_curv) {
      hist.status = RunStatus::SingularityReached;
      break;
    }
    if (stop_res) {
      hist.status = RunStatus::ResolutionLimited;
      break;
    }
  }
  if (hist.snapshots.back().time != st.time) record(st);

  if (hist.status != RunStatus::FinalTimeReached) {
    hist.estimate = estimate_singular_time(hist);
    if (hist.estimate.determined) {
      hist.singular_time = hist.estimate.time;
      hist.type_one = type_one_constants(hist, hist.singular_time);
    }
  }
  diag.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return hist;
}

WarpedMetric dumbbell_profile(int n, double neck_ratio, std::size_t points, double scale) {
  if (n < 3) throw UnsupportedDimension("dumbbell needs n >= 3");
  if (!(neck_ratio > 0.0 && neck_ratio < 1.0)) throw std::invalid_argument("neck ratio must lie in (0, 1)");
  if (points < 8) throw std::invalid_argument("dumbbell needs at least 8 points");
  WarpedMetric g;
  g.n = n;
  g.topology = Topology::SphereClosed;
  g.s.resize(points);
  g.psi.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = std::numbers::pi * static_cast<double>(i) / static_cast<double>(points - 1);
    const double c = std::cos(x);
    g.s[i] = scale * x;
    g.psi[i] = scale * std::sin(x) * (neck_ratio + (1.0 - neck_ratio) * c * c);
  }
  g.psi.front() = 0.0;
  g.psi.back() = 0.0;
  return g;
}

std::string dumbbell_description(double neck_ratio, double scale) {
  std::ostringstream os;
  os.precision(17);
  os << "psi(s) = " << scale << " * sin(s/" << scale << ") * (" << neck_ratio << " + " << (1.0 - neck_ratio)
     << " * cos^2(s/" << scale << ")), s in [0, pi*" << scale << "]";
  return os.str();
}

}  // namespace rflab
