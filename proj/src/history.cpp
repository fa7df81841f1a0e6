#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "rflab/flow.hpp"

namespace rflab {

void FlowHistory::push(WarpedMetric metric, std::vector<double> label) {
  if (!snapshots.empty() && !(metric.time > snapshots.back().time)) {
    throw std::invalid_argument("snapshot times must increase strictly");
  }
  curvatures.push_back(curvature_field(metric));
  snapshots.push_back(std::move(metric));
  labels.push_back(std::move(label));
}

namespace {

double blend_log(double a, double b, double w) {
  if (a > 0.0 && b > 0.0) return std::exp((1.0 - w) * std::log(a) + w * std::log(b));
  return (1.0 - w) * a + w * b;
}

}  // namespace

FlowHistory::TimeBracket FlowHistory::bracket(double t) const {
  const FlowHistory& h = *this;
  const std::size_t count = h.size();
  if (count == 1) return {};
  std::size_t k = 0;
  if (t >= h.snapshots.back().time) {
    k = count - 2;
  } else if (t > h.snapshots.front().time) {
    auto it = std::upper_bound(h.snapshots.begin(), h.snapshots.end(), t,
                               [](double v, const WarpedMetric& g) { return v < g.time; });
    k = static_cast<std::size_t>(it - h.snapshots.begin()) - 1;
  }
  const double t0 = h.snapshots[k].time, t1 = h.snapshots[k + 1].time;
  TimeBracket b;
  b.k = k;
  if (h.singular() && h.singular_time > t1 && h.singular_time > t) {
    const double a0 = std::log(h.singular_time - t0), a1 = std::log(h.singular_time - t1);
    b.w = (std::log(h.singular_time - t) - a0) / (a1 - a0);
  } else {
    b.w = (t - t0) / (t1 - t0);
  }
  return b;
}

WarpedMetric FlowHistory::metric_at(double t) const {
  if (snapshots.empty()) throw std::logic_error("empty history");
  if (size() == 1) return snapshots.front();
  const TimeBracket b = bracket(t);
  const WarpedMetric& g0 = snapshots[b.k];
  const WarpedMetric& g1 = snapshots[b.k + 1];
  if (b.w == 0.0) return g0;
  if (b.w == 1.0) return g1;
  if (g0.size() != g1.size()) return b.w < 0.5 ? g0 : g1;
  WarpedMetric g = g0;
  g.time = t;
  const double L0 = g0.length(), L1 = g1.length();
  const double L = blend_log(L0, L1, b.w);
  const double origin = (1.0 - b.w) * g0.s.front() + b.w * g1.s.front();
  if (g.topology == Topology::CylinderPeriodic) g.period = blend_log(g0.period, g1.period, b.w);
  const std::size_t m = g.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double u = (1.0 - b.w) * (g0.s[i] - g0.s.front()) / L0 + b.w * (g1.s[i] - g1.s.front()) / L1;
    g.s[i] = origin + u * L;
    g.psi[i] = blend_log(g0.psi[i], g1.psi[i], b.w);
  }
  return g;
}

std::vector<double> FlowHistory::labels_at(double t) const {
  if (size() == 1) return labels.front();
  const TimeBracket b = bracket(t);
  const auto& a = labels[b.k];
  const auto& c = labels[b.k + 1];
  if (a.size() != c.size()) return b.w < 0.5 ? a : c;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - b.w) * a[i] + b.w * c[i];
  return out;
}

namespace {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double N = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= N;
  my /= N;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

// Fits sup|Rm| = a / (T - t) in log-log over the given points. Returns T;
// `rate` and `residual` are filled in.
double loglog_fit(const std::vector<double>& t, const std::vector<double>& M, double T_guess, double& rate,
                  double& residual) {
  const double t_last = t.back();
  auto stats = [&](double T, double& log_a) {
    log_a = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) log_a += std::log(M[i]) + std::log(T - t[i]);
    log_a /= static_cast<double>(t.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = std::log(M[i]) + std::log(T - t[i]) - log_a;
      ss += r * r;
    }
    return ss;
  };
  // Search in log(T - t_last) so the precision is relative to the remaining time.
  const double tau = std::max(T_guess - t_last, 1e-300);
  const auto best_log = boost::math::tools::brent_find_minima(
      [&](double x) {
        double la;
        return stats(t_last + std::exp(x), la);
      },
      std::log(0.2 * tau), std::log(5.0 * tau), 52);
  const std::pair<double, double> best{t_last + std::exp(best_log.first), best_log.second};
  double log_a;
  const double ss = stats(best.first, log_a);
  rate = std::exp(log_a);
  residual = std::sqrt(ss / static_cast<double>(t.size()));
  return best.first;
}

double linear_guess(const std::vector<double>& t, const std::vector<double>& M) {
  std::vector<double> x(M.size()), inv(M.size());
  for (std::size_t i = 0; i < M.size(); ++i) {
    x[i] = t[i] - t.back();
    inv[i] = 1.0 / M[i];
  }
  const LineFit f = fit_line(x, inv);
  if (!(f.slope < 0.0)) return kNaN;
  return t.back() - f.intercept / f.slope;
}

}  // namespace

SingularTimeEstimate estimate_singular_time(const FlowHistory& history, double max_residual) {
  SingularTimeEstimate est;
  const std::size_t count = history.size();
  if (count < 4) {
    est.note = "fewer than 4 snapshots";
    return est;
  }
  std::vector<double> M(count);
  for (std::size_t k = 0; k < count; ++k) M[k] = history.curvatures[k].sup_riem();
  const double M_last = M.back();
  const double M_min = *std::min_element(M.begin(), M.end());
  if (!(M_last > 0.0) || !(M_last >= 10.0 * M_min)) {
    est.note = "curvature does not grow by a decade";
    return est;
  }
  std::size_t begin = count - 1;
  while (begin > 0 && M[begin - 1] >= 0.1 * M_last) --begin;
  est.window_begin = begin;
  std::vector<double> tw, Mw;
  for (std::size_t k = begin; k < count; ++k) {
    tw.push_back(history.snapshots[k].time);
    Mw.push_back(M[k]);
  }
  if (tw.size() < 4) {
    est.note = "fewer than 4 snapshots in the final decade";
    return est;
  }
  const double guess = linear_guess(tw, Mw);
  if (!(guess > tw.back())) {
    est.note = "1/sup|Rm| is not decreasing in the final decade";
    return est;
  }
  est.fit_time = loglog_fit(tw, Mw, guess, est.rate, est.residual);
  est.time = est.fit_time;

  const std::size_t mid = tw.size() / 2;
  std::vector<double> ta(tw.begin(), tw.begin() + static_cast<long>(mid) + 1), Ma(Mw.begin(), Mw.begin() + static_cast<long>(mid) + 1);
  std::vector<double> tb(tw.begin() + static_cast<long>(mid), tw.end()), Mb(Mw.begin() + static_cast<long>(mid), Mw.end());
  const double Ta = linear_guess(ta, Ma), Tb = linear_guess(tb, Mb);
  est.uncertainty = std::abs(Ta - Tb);

  // Secant zeros of 1/sup|Rm| over consecutive pairs drift towards T-hat in
  // proportion to the remaining time; extrapolate the later half to t = T-hat.
  std::vector<double> xs, zs;
  for (std::size_t i = mid; i + 1 < tw.size(); ++i) {
    const double y0 = 1.0 / Mw[i], y1 = 1.0 / Mw[i + 1];
    if (!(y1 < y0)) continue;
    xs.push_back(tw[i + 1] - tw.back());
    zs.push_back(tw[i + 1] + y1 * (tw[i + 1] - tw[i]) / (y0 - y1) - tw.back());
  }
  if (xs.size() >= 3) {
    const LineFit drift = fit_line(xs, zs);
    const double remaining = drift.intercept / (1.0 - drift.slope);
    if (drift.slope < 0.9 && remaining > 0.0) {
      est.time = tw.back() + remaining;
      est.uncertainty = std::max(est.uncertainty, std::abs(est.time - est.fit_time));
    }
  }

  est.consistency = std::abs(tw.back() + est.rate / Mw.back() - est.time);
  std::vector<double> lx(tw.size()), ly(tw.size());
  for (std::size_t i = 0; i < tw.size(); ++i) {
    lx[i] = std::log(est.time - tw[i]);
    ly[i] = std::log(Mw[i]);
  }
  est.exponent = -fit_line(lx, ly).slope;
  est.determined = est.residual <= max_residual;
  if (!est.determined) est.note = "log-log residual above threshold";
  return est;
}

TypeIConstants type_one_constants(const FlowHistory& history, double singular_time, double tolerance) {
  TypeIConstants c;
  if (!(singular_time > history.last_time())) return c;
  const std::size_t count = history.size();
  std::vector<double> M(count);
  for (std::size_t k = 0; k < count; ++k) M[k] = history.curvatures[k].sup_riem();
  c.upper = 0.0;
  c.lower_all = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    const double v = (singular_time - history.snapshots[k].time) * M[k];
    c.upper = std::max(c.upper, v);
    c.lower_all = std::min(c.lower_all, v);
  }
  std::size_t begin = count - 1;
  while (begin > 0 && M[begin - 1] >= 0.1 * M.back()) --begin;
  c.lower = std::numeric_limits<double>::infinity();
  std::vector<double> lx, ly;
  for (std::size_t k = begin; k < count; ++k) {
    const double tau = singular_time - history.snapshots[k].time;
    c.lower = std::min(c.lower, tau * M[k]);
    lx.push_back(std::log(tau));
    ly.push_back(std::log(tau * M[k]));
  }
  c.lower_bound_ok = c.lower >= 0.125 - tolerance;
  // Type I: tau * sup|Rm| shows no power-law growth over the final decade.
  const double slope = lx.size() >= 2 ? fit_line(lx, ly).slope : 0.0;
  c.upper_bounded = std::isfinite(c.upper) && slope > -0.1;
  return c;
}

FlowHistory sample_exact_history(const ExactFlow& flow, std::size_t points, double tau_min, int per_decade,
                                 double t_start) {
  FlowHistory h;
  const double T = flow.singular_time;
  std::vector<double> times;
  if (flow.family == ExactFamily::GaussianFlat) {
    const double t_end = T - tau_min;
    for (int k = 0; k <= 32; ++k) times.push_back(t_start + (t_end - t_start) * k / 32.0);
  } else {
    const double tau0 = T - t_start;
    const double decades = std::log10(tau0 / tau_min);
    const int steps = static_cast<int>(std::ceil(decades * per_decade - 1e-9));
    for (int k = 0; k <= steps; ++k) {
      const double tau = k == steps ? tau_min : tau0 * std::pow(10.0, -static_cast<double>(k) / per_decade);
      times.push_back(T - tau);
    }
  }
  for (double t : times) {
    WarpedMetric g = flow.evaluate(t, points);
    std::vector<double> labels(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) labels[i] = flow.material_label(g.s[i], t);
    h.push(std::move(g), std::move(labels));
  }
  h.initial_data = std::string("exact ") + std::string(to_string(flow.family));
  if (flow.family == ExactFamily::GaussianFlat) {
    h.status = RunStatus::FinalTimeReached;
    h.estimate = estimate_singular_time(h);
  } else {
    h.status = RunStatus::SingularityReached;
    h.estimate = estimate_singular_time(h);
    if (h.estimate.determined) {
      h.singular_time = h.estimate.time;
      h.type_one = type_one_constants(h, h.singular_time);
    }
  }
  return h;
}

void write_history(std::ostream& os, const FlowHistory& h) {
  if (h.size() == 0) throw std::invalid_argument("write_history: empty history");
  os << "# flow history\n" << std::setprecision(17);
  os << "n " << h.n() << "\n";
  os << "topology " << to_string(h.snapshots.front().topology) << "\n";
  os << "status " << to_string(h.status) << "\n";
  os << "singular_time " << h.singular_time << "\n";
  os << "initial_data " << h.initial_data << "\n";
  os << "diagnostics " << h.diagnostics.accepted_steps << " " << h.diagnostics.rejected_steps << " "
     << h.diagnostics.min_step << " " << h.diagnostics.max_step << " " << h.diagnostics.wall_seconds << "\n";
  os << "snapshots " << h.size() << "\n";
  for (std::size_t k = 0; k < h.size(); ++k) {
    const WarpedMetric& g = h.snapshots[k];
    os << "snapshot " << g.time << " " << g.period << " " << g.size() << "\n";
    for (std::size_t i = 0; i < g.size(); ++i) os << g.s[i] << " " << g.psi[i] << " " << h.labels[k][i] << "\n";
  }
}

FlowHistory read_history(std::istream& is) {
  FlowHistory h;
  int n = 0;
  Topology topo = Topology::SphereClosed;
  std::string line, key;
  auto fail = [](const std::string& what) { throw InvalidMetric("malformed history: " + what); };
  auto number = [&](std::istringstream& ls) {
    std::string word;
    ls >> word;
    return word == "nan" || word == "-nan" ? kNaN : std::stod(word);
  };
  std::size_t count = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ls >> key;
    if (key == "n") {
      ls >> n;
    } else if (key == "topology") {
      std::string name;
      ls >> name;
      topo = topology_from_string(name);
    } else if (key == "status") {
      std::string name;
      ls >> name;
      for (RunStatus s : {RunStatus::SingularityReached, RunStatus::ResolutionLimited, RunStatus::FinalTimeReached,
                          RunStatus::StepUnderflow}) {
        if (to_string(s) == name) h.status = s;
      }
    } else if (key == "singular_time") {
      h.singular_time = number(ls);
    } else if (key == "initial_data") {
      std::getline(ls >> std::ws, h.initial_data);
    } else if (key == "diagnostics") {
      SolverDiagnostics& d = h.diagnostics;
      ls >> d.accepted_steps >> d.rejected_steps;
      d.min_step = number(ls);
      d.max_step = number(ls);
      d.wall_seconds = number(ls);
    } else if (key == "snapshots") {
      ls >> count;
    } else if (key == "snapshot") {
      WarpedMetric g;
      g.n = n;
      g.topology = topo;
      std::size_t m = 0;
      ls >> g.time >> g.period >> m;
      if (ls.fail() || m < 2) fail(line);
      std::vector<double> labels(m);
      g.s.resize(m);
      g.psi.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        if (!std::getline(is, line)) fail("truncated snapshot");
        std::istringstream row(line);
        if (!(row >> g.s[i] >> g.psi[i] >> labels[i])) fail(line);
      }
      h.push(std::move(g), std::move(labels));
    } else {
      fail(line);
    }
  }
  if (n < 1 || h.size() == 0 || (count != 0 && count != h.size())) fail("missing header or snapshots");
  if (h.status != RunStatus::FinalTimeReached) h.estimate = estimate_singular_time(h);
  if (h.singular()) h.type_one = type_one_constants(h, h.singular_time);
  return h;
}

}  // namespace rflab
