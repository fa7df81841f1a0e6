#include "rflab/material.hpp"

#include <algorithm>
#include <cmath>

namespace rflab {

namespace {

constexpr std::size_t kGhosts = 4;

}  // namespace

MaterialFlow::MaterialFlow(const FlowHistory& history) : history_(&history) {
  if (history.size() == 0) throw std::invalid_argument("MaterialFlow: empty history");
  const WarpedMetric& g0 = history.snapshots.front();
  topology_ = g0.topology;
  pole_front_ = g0.has_pole_front();
  pole_back_ = g0.has_pole_back();
  label_min_ = history.labels.front().front();
  label_max_ = history.labels.front().back();
  label_period_ = periodic() ? g0.period : label_max_ - label_min_;

  slices_.reserve(history.size());
  for (std::size_t k = 0; k < history.size(); ++k) {
    const WarpedMetric& g = history.snapshots[k];
    const CurvatureField& c = history.curvatures[k];
    const std::vector<double>& lab = history.labels[k];
    const std::size_t m = g.size();
    Slice sl;
    sl.origin = g.s.front();
    sl.length = g.length();
    sl.first = lab.front();
    std::vector<double> x, u, psi, scalar, riem;
    auto push = [&](double xi, double ui, double pi, double ri, double mi) {
      x.push_back(xi);
      u.push_back(ui);
      psi.push_back(pi);
      scalar.push_back(ri);
      riem.push_back(mi);
    };
    auto node_u = [&](std::size_t i) { return (g.s[i] - sl.origin) / sl.length; };
    if (periodic()) {
      for (int copy = -1; copy <= 1; ++copy) {
        for (std::size_t i = 0; i < m; ++i) {
          push(lab[i] + copy * label_period_, node_u(i) + copy, g.psi[i], c.scalar[i], c.riem_norm[i]);
        }
      }
    } else {
      const std::size_t ghosts = std::min(kGhosts, m - 1);
      if (pole_front_) {
        for (std::size_t j = ghosts; j >= 1; --j) {
          push(2.0 * lab[0] - lab[j], 2.0 * node_u(0) - node_u(j), -g.psi[j], c.scalar[j], c.riem_norm[j]);
        }
      }
      for (std::size_t i = 0; i < m; ++i) push(lab[i], node_u(i), g.psi[i], c.scalar[i], c.riem_norm[i]);
      if (pole_back_) {
        for (std::size_t j = 1; j <= ghosts; ++j) {
          const std::size_t i = m - 1 - j;
          push(2.0 * lab[m - 1] - lab[i], 2.0 * node_u(m - 1) - node_u(i), -g.psi[i], c.scalar[i],
               c.riem_norm[i]);
        }
      }
    }
    sl.u = CubicSpline(x, u);
    sl.psi = CubicSpline(x, psi);
    sl.scalar = CubicSpline(x, scalar);
    sl.riem = CubicSpline(x, riem);
    slices_.push_back(std::move(sl));
  }
}

double MaterialFlow::clamp_label(double x) const {
  if (periodic()) return x;
  return std::clamp(x, label_min_, label_max_);
}

MaterialFlow::Frame MaterialFlow::frame(double t) const {
  Frame f;
  f.time = t;
  const std::size_t count = slices_.size();
  if (count == 1) {
    f.origin = slices_[0].origin;
    f.length = slices_[0].length;
    return f;
  }
  const FlowHistory& h = *history_;
  const FlowHistory::TimeBracket b = h.bracket(t);
  f.k = b.k;
  f.w = b.w;
  if (t < h.first_time() || t > h.last_time() || count < 3) {
    f.first = b.k;
    f.count = 2;
    f.weight[0] = 1.0 - b.w;
    f.weight[1] = b.w;
  } else {
    const std::size_t span = std::min<std::size_t>(4, count);
    f.first = std::min(b.k > 0 ? b.k - 1 : 0, count - span);
    f.count = static_cast<int>(span);
    const bool log_time = h.singular() && h.singular_time > h.snapshots[f.first + span - 1].time;
    auto coord = [&](double time) { return log_time ? std::log(h.singular_time - time) : time; };
    const double c = coord(t);
    for (std::size_t i = 0; i < span; ++i) {
      double wi = 1.0;
      const double ci = coord(h.snapshots[f.first + i].time);
      for (std::size_t j = 0; j < span; ++j) {
        if (j != i) wi *= (c - coord(h.snapshots[f.first + j].time)) / (ci - coord(h.snapshots[f.first + j].time));
      }
      f.weight[i] = wi;
    }
  }
  double log_length = 0.0;
  f.origin = 0.0;
  for (int i = 0; i < f.count; ++i) {
    const Slice& sl = slices_[f.first + static_cast<std::size_t>(i)];
    f.origin += f.weight[i] * sl.origin;
    log_length += f.weight[i] * std::log(sl.length);
  }
  f.length = std::exp(log_length);
  return f;
}

void MaterialFlow::evaluate(const Slice& sl, double x, Column& u, Column& psi, Column& scalar,
                            double& riem) const {
  double shift = 0.0;
  if (periodic()) {
    shift = std::floor((x - sl.first) / label_period_);
    x -= shift * label_period_;
  } else {
    x = std::clamp(x, label_min_, label_max_);
  }
  const std::size_t i = sl.u.locate(x);
  const auto su = sl.u.eval_on(i, x);
  const auto sp = sl.psi.eval_on(i, x);
  const auto sr = sl.scalar.eval_on(i, x);
  u = {su.value + shift, su.d1, su.d2};
  psi = {sp.value, sp.d1, sp.d2};
  scalar = {sr.value, sr.d1, sr.d2};
  riem = sl.riem.eval_on(i, x).value;
}

MaterialSample MaterialFlow::at(double x, const Frame& f) const {
  Column u[4], p[4], r[4];
  double m[4];
  bool psi_pos = true, dpsi_pos = true, scalar_pos = true, riem_pos = true;
  for (int i = 0; i < f.count; ++i) {
    evaluate(slices_[f.first + static_cast<std::size_t>(i)], x, u[i], p[i], r[i], m[i]);
    psi_pos = psi_pos && p[i].value > 0.0;
    dpsi_pos = dpsi_pos && p[i].d1 > 0.0;
    scalar_pos = scalar_pos && r[i].value > 0.0;
    riem_pos = riem_pos && m[i] > 0.0;
  }
  MaterialSample out;
  double us = 0.0, ud = 0.0, udd = 0.0;
  double lin_psi = 0.0, lin_dpsi = 0.0, log_psi = 0.0, dlog_psi = 0.0, log_dpsi = 0.0;
  double lin_r = 0.0, lin_rx = 0.0, lin_rxx = 0.0, log_r = 0.0, g1 = 0.0, g2 = 0.0;
  double lin_m = 0.0, log_m = 0.0;
  for (int i = 0; i < f.count; ++i) {
    const double w = f.weight[i];
    us += w * u[i].value;
    ud += w * u[i].d1;
    udd += w * u[i].d2;
    lin_psi += w * p[i].value;
    lin_dpsi += w * p[i].d1;
    lin_r += w * r[i].value;
    lin_rx += w * r[i].d1;
    lin_rxx += w * r[i].d2;
    lin_m += w * m[i];
    if (psi_pos) {
      log_psi += w * std::log(p[i].value);
      dlog_psi += w * p[i].d1 / p[i].value;
    }
    if (dpsi_pos) log_dpsi += w * std::log(p[i].d1);
    if (scalar_pos) {
      const double li = r[i].d1 / r[i].value;
      log_r += w * std::log(r[i].value);
      g1 += w * li;
      g2 += w * (r[i].d2 / r[i].value - li * li);
    }
    if (riem_pos) log_m += w * std::log(m[i]);
  }
  out.s = f.origin + f.length * us;
  out.s_x = f.length * ud;
  out.s_xx = f.length * udd;
  if (psi_pos) {
    out.psi = std::exp(log_psi);
    out.psi_x = out.psi * dlog_psi;
  } else {
    out.psi = std::max(0.0, lin_psi);
    out.psi_x = dpsi_pos ? std::exp(log_dpsi) : lin_dpsi;
  }
  if (scalar_pos) {
    out.scalar = std::exp(log_r);
    out.scalar_x = out.scalar * g1;
    out.scalar_xx = out.scalar * (g1 * g1 + g2);
  } else {
    out.scalar = lin_r;
    out.scalar_x = lin_rx;
    out.scalar_xx = lin_rxx;
  }
  out.riem = riem_pos ? std::exp(log_m) : std::max(0.0, lin_m);
  return out;
}

double MaterialFlow::position(double x, const Frame& f) const {
  Column u, p, r;
  double m;
  double us = 0.0;
  for (int i = 0; i < f.count; ++i) {
    evaluate(slices_[f.first + static_cast<std::size_t>(i)], x, u, p, r, m);
    us += f.weight[i] * u.value;
  }
  return f.origin + f.length * us;
}

double MaterialFlow::s_front(const Frame& f) const {
  return periodic() ? f.origin : position(label_min_, f);
}

double MaterialFlow::s_back(const Frame& f) const {
  return periodic() ? f.origin + f.length : position(label_max_, f);
}

double MaterialFlow::label_at(double s, const Frame& f) const {
  if (!periodic()) {
    double lo = label_min_, hi = label_max_;
    if (s <= position(lo, f)) return lo;
    if (s >= position(hi, f)) return hi;
    double x = lo + (hi - lo) * (s - s_front(f)) / (s_back(f) - s_front(f));
    for (int it = 0; it < 100; ++it) {
      const MaterialSample ms = at(x, f);
      const double r = ms.s - s;
      if (r > 0.0) hi = x; else lo = x;
      if (std::abs(r) <= 1e-14 * (1.0 + std::abs(s))) return x;
      double next = ms.s_x > 0.0 ? x - r / ms.s_x : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo <= 1e-15 * (1.0 + std::abs(x))) return next;
      x = next;
    }
    return x;
  }
  double x = slices_[f.k].first + label_period_ * (s - f.origin) / f.length;
  for (int it = 0; it < 50; ++it) {
    const MaterialSample ms = at(x, f);
    const double r = ms.s - s;
    if (std::abs(r) <= 1e-14 * (1.0 + std::abs(s))) break;
    x -= r / ms.s_x;
  }
  return x;
}

double MaterialFlow::distance(double x, double y, const Frame& f) const {
  return std::abs(position(x, f) - position(y, f));
}

}  // namespace rflab
