#include "rflab/perelman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstring>
#include <numbers>
#include <random>

#include "rflab/solutions.hpp"

namespace rflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix(std::uint64_t h, double v) {
  std::uint64_t bits;
  static_assert(sizeof bits == sizeof v);
  std::memcpy(&bits, &v, sizeof v);
  h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

struct LinkSlice {
  MaterialFlow::Frame frame;
  double du = 0.0;
  double weight = 0.0;  // du u_mid^2, the trapezoid weight of 2 u^2 R
};

}  // namespace

Basepoint singular_basepoint(const FlowHistory& history, double label) {
  if (!history.singular()) throw std::invalid_argument("history has no singular time");
  return {label, history.singular_time, true};
}

LCurve minimize_L(const MaterialFlow& flow, double p, double t0, double q, double tbar, int nodes,
                  const LOptions& options, const LCurve* warm, double horizon) {
  if (!(t0 > tbar)) throw std::invalid_argument("minimize_L needs tbar < t0");
  if (nodes < 2) throw std::invalid_argument("minimize_L needs at least 2 links");
  if (!(horizon >= t0)) horizon = t0;
  const double u0 = std::sqrt(horizon - t0);
  const double ubar = std::sqrt(horizon - tbar);
  const std::size_t cap = u0 > 0.0 ? 1 : 0;
  const std::size_t N = static_cast<std::size_t>(nodes) + cap;
  const double du = (ubar - u0) / static_cast<double>(nodes);

  // With a horizon the first link spans [0, u0] in the metric at t0 under a
  // frozen curvature rate R (horizon - t).
  std::vector<LinkSlice> slices(N);
  std::vector<double> u(N + 1, 0.0);
  for (std::size_t j = cap; j < N; ++j) {
    const double u_mid = u0 + (static_cast<double>(j - cap) + 0.5) * du;
    slices[j] = {flow.frame(horizon - u_mid * u_mid), du, du * u_mid * u_mid};
    u[j] = u0 + du * static_cast<double>(j - cap);
  }
  if (cap) slices[0] = {flow.frame(t0), u0, u0 * u0 * u0};
  u[N] = ubar;

  // Work in scaled labels y = (x - p) / scale so that l and its gradient are O(1).
  const MaterialFlow::Frame end_frame = flow.frame(tbar);
  const MaterialSample at_p = flow.at(p, end_frame);
  const double stretch = std::max(at_p.s_x, 1e-300);
  const double scale = std::max(std::abs(q - p), std::sqrt(t0 - tbar) / stretch);
  const double norm = 1.0 / (2.0 * ubar);

  const LinkFunction link = [&](std::size_t j, double ya, double yb) {
    const LinkSlice& sl = slices[j];
    const MaterialSample A = flow.at(p + scale * ya, sl.frame);
    const MaterialSample B = flow.at(p + scale * yb, sl.frame);
    const double ds = B.s - A.s;
    const double w = sl.weight;
    const double du = sl.du;
    LinkEnergy e;
    e.value = norm * (ds * ds / (2.0 * du) + w * (A.scalar + B.scalar));
    e.ga = norm * scale * (-ds * A.s_x / du + w * A.scalar_x);
    e.gb = norm * scale * (ds * B.s_x / du + w * B.scalar_x);
    e.haa = norm * scale * scale * ((A.s_x * A.s_x - ds * A.s_xx) / du + w * A.scalar_xx);
    e.hab = norm * scale * scale * (-A.s_x * B.s_x / du);
    e.hbb = norm * scale * scale * ((B.s_x * B.s_x + ds * B.s_xx) / du + w * B.scalar_xx);
    return e;
  };

  std::vector<double> lower(N + 1, -kInf), upper(N + 1, kInf);
  if (!flow.periodic()) {
    for (std::size_t j = 0; j <= N; ++j) {
      lower[j] = (flow.label_min() - p) / scale;
      upper[j] = (flow.label_max() - p) / scale;
    }
  }

  LCurve best;
  best.base_label = p;
  best.base_time = horizon;
  best.end_label = q;
  best.end_time = tbar;
  best.u = u;

  // Starts: the warm curve when one fits, the constant-speed meridian at
  // time tbar, then random perturbations of the meridian.
  const double sp = at_p.s;
  const double sq = flow.position(q, end_frame);
  std::vector<double> base_guess(N + 1);
  for (std::size_t j = 0; j <= N; ++j) {
    const double frac = static_cast<double>(j) / static_cast<double>(N);
    base_guess[j] = (flow.label_at(sp + (sq - sp) * frac, end_frame) - p) / scale;
  }
  base_guess.front() = 0.0;
  base_guess.back() = (q - p) / scale;
  const bool use_warm = warm != nullptr && warm->labels.size() == N + 1;

  std::uint64_t h = options.seed;
  h = mix(mix(mix(mix(h, p), q), t0), tbar);
  std::mt19937_64 rng(h);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);

  const int starts = std::max(1, options.starts);
  double best_value = kInf;
  for (int start = 0; start < starts; ++start) {
    std::vector<double> guess = base_guess;
    const int kind = use_warm ? start : start + 1;  // 0 warm, 1 meridian, 2+ perturbed
    if (kind == 0) {
      for (std::size_t j = 0; j <= N; ++j) {
        const double frac = static_cast<double>(j) / static_cast<double>(N);
        guess[j] = (warm->labels[j] + (q - warm->end_label) * frac + (p - warm->base_label) * (1.0 - frac) - p) / scale;
      }
    } else if (kind > 1) {
      const double a1 = coef(rng), a2 = coef(rng), a3 = coef(rng);
      const double amp = options.perturbation;
      for (std::size_t j = 1; j < N; ++j) {
        const double z = std::numbers::pi * static_cast<double>(j) / static_cast<double>(N);
        guess[j] += amp * (a1 * std::sin(z) + 0.5 * a2 * std::sin(2.0 * z) + 0.33 * a3 * std::sin(3.0 * z));
      }
    }
    guess.front() = 0.0;
    guess.back() = (q - p) / scale;
    ChainResult r = minimize_chain(link, guess, lower, upper, options.chain);
    const bool better = r.value < best_value - 1e-13 * std::abs(best_value) ||
                        (!best.converged && r.converged && r.value <= best_value + 1e-10 * std::abs(best_value));
    if (start == 0 || better) {
      best_value = r.value;
      best.best_start = start;
      best.converged = r.converged;
      best.gradient_norm = r.gradient_norm;
      best.iterations = r.iterations;
      best.labels.resize(N + 1);
      for (std::size_t j = 0; j <= N; ++j) best.labels[j] = p + scale * r.x[j];
    }
  }
  best.reduced_distance = best_value;
  best.l_value = best_value * 2.0 * ubar;
  return best;
}

LCurve minimize_L(const FlowHistory& history, double p, double t0, double q, double tbar, int nodes,
                  const LOptions& options) {
  const MaterialFlow flow(history);
  return minimize_L(flow, p, t0, q, tbar, nodes, options);
}

ReducedDistance::ReducedDistance(const MaterialFlow& flow, Basepoint base, LOptions options)
    : flow_(&flow), base_(base), options_(options) {
  if (base_.at_singular_time) {
    const FlowHistory& h = flow.history();
    if (!h.singular()) throw std::invalid_argument("singular-time basepoint on a history without T-hat");
    base_.time = h.singular_time;
    guard_ = 4.0 * (h.singular_time - h.last_time());
  }
}

void ReducedDistance::reset_warm_start() { std::fill(has_warm_.begin(), has_warm_.end(), 0); }

ReducedDistance::WarmState ReducedDistance::warm_state() const { return {warm_, has_warm_}; }

void ReducedDistance::set_warm_state(const WarmState& state) {
  warm_ = state.curve;
  has_warm_ = state.valid;
}

ReducedDistanceValue ReducedDistance::operator()(double q, double tbar) {
  ReducedDistanceValue out;
  const double p = base_.label;
  if (!base_.at_singular_time) {
    warm_.resize(1);
    has_warm_.resize(1, 0);
    const LCurve c = minimize_L(*flow_, p, base_.time, q, tbar, options_.nodes, options_, has_warm_[0] ? &warm_[0] : nullptr);
    warm_[0] = c;
    has_warm_[0] = 1;
    out.l = out.coarse = out.fine = c.reduced_distance;
    out.converged = c.converged;
    out.nodes = options_.nodes;
    return out;
  }
  // Curves end at T - eps_k with eps_k = 2^k guard, so every end lies inside
  // the recorded history, and carry the weight sqrt(T - t) of the limit; l is
  // extrapolated to eps = 0 by a polynomial in sqrt(eps) through the levels.
  const double T = base_.time;
  const double tau = T - tbar;
  if (!(tau > 0.0)) throw std::invalid_argument("tbar must precede the singular time");
  const std::size_t levels = static_cast<std::size_t>(std::max(2, options_.levels));
  warm_.resize(levels);
  has_warm_.resize(levels, 0);
  std::vector<double> h(levels), l(levels);
  out.converged = true;
  const double top = std::min(guard_ * std::ldexp(1.0, static_cast<int>(levels) - 1), tau / 16.0);
  // Full multi-start on the widest gap; each narrower gap starts from the
  // curve of the previous one.
  LOptions narrow = options_;
  narrow.starts = 1;
  for (std::size_t k = 0; k < levels; ++k) {
    const double e = top * std::ldexp(1.0, -static_cast<int>(k));
    const LCurve* warm = k == 0 ? (has_warm_[0] ? &warm_[0] : nullptr) : &warm_[k - 1];
    const LCurve c = minimize_L(*flow_, p, T - e, q, tbar, options_.nodes, k == 0 ? options_ : narrow, warm, T);
    warm_[k] = c;
    has_warm_[k] = 1;
    h[k] = std::sqrt(e);
    l[k] = c.reduced_distance;
    out.converged = out.converged && c.converged;
    out.guard = e;
    out.nodes = options_.nodes;
  }
  out.l = 0.0;
  for (std::size_t i = 0; i < levels; ++i) {
    double w = 1.0;
    for (std::size_t j = 0; j < levels; ++j) {
      if (j != i) w *= h[j] / (h[j] - h[i]);
    }
    out.l += w * l[i];
  }
  out.coarse = l.front();
  out.fine = l.back();
  out.extrapolated = T - out.guard > flow_->history().last_time();
  return out;
}

std::size_t ReducedDistanceField::unconverged() const {
  std::size_t count = 0;
  for (const auto& row : converged) {
    for (char c : row) count += c ? 0 : 1;
  }
  return count;
}

namespace {

std::size_t closest(const std::vector<double>& pos, double centre) {
  std::size_t c = 0;
  for (std::size_t i = 1; i < pos.size(); ++i) {
    if (std::abs(pos[i] - centre) < std::abs(pos[c] - centre)) c = i;
  }
  return c;
}

// Evaluates eval(i) for every sample, starting next to the basepoint and
// sweeping outward on both sides, so each warm start comes from a neighbour.
template <class Eval>
void outward_sweep(ReducedDistance& rd, std::size_t count, std::size_t centre, Eval eval) {
  rd.reset_warm_start();
  eval(centre);
  const ReducedDistance::WarmState at_centre = rd.warm_state();
  for (std::size_t i = centre + 1; i < count; ++i) eval(i);
  rd.set_warm_state(at_centre);
  for (std::size_t i = centre; i-- > 0;) eval(i);
}

}  // namespace

ReducedDistanceField reduced_distance_field(const MaterialFlow& flow, const Basepoint& base,
                                            const std::vector<double>& q_labels,
                                            const std::vector<double>& times, const LOptions& options) {
  ReducedDistanceField f;
  f.base = base;
  f.times = times;
  f.labels = q_labels;
  const std::size_t nt = times.size(), nq = q_labels.size();
  f.l.assign(nt, std::vector<double>(nq, kNaN));
  f.converged.assign(nt, std::vector<char>(nq, 0));
  f.extrapolated.assign(nt, std::vector<char>(nq, 0));
  ReducedDistance rd(flow, base, options);
  f.guard = rd.guard();
  f.base.time = base.at_singular_time ? flow.history().singular_time : base.time;
  const std::size_t centre = closest(q_labels, base.label);
  for (std::size_t k = 0; k < nt; ++k) {
    outward_sweep(rd, nq, centre, [&](std::size_t i) {
      const ReducedDistanceValue v = rd(q_labels[i], times[k]);
      f.l[k][i] = v.l;
      f.converged[k][i] = v.converged;
      f.extrapolated[k][i] = v.extrapolated;
    });
  }
  return f;
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// int_0^inf y^k exp(-beta (d + y)^2) dy for k = 0..kmax.
std::vector<double> gaussian_tail_moments(double beta, double d, int kmax) {
  const double e = std::exp(-beta * d * d);
  std::vector<double> M(static_cast<std::size_t>(kmax) + 1);
  M[0] = 0.5 * std::sqrt(std::numbers::pi / beta) * std::erfc(d * std::sqrt(beta));
  if (kmax >= 1) M[1] = e / (2.0 * beta);
  for (int j = 2; j <= kmax; ++j) {
    M[static_cast<std::size_t>(j)] = (j - 1) / (2.0 * beta) * M[static_cast<std::size_t>(j - 2)] + std::pow(d, j - 1) * e / (2.0 * beta);
  }
  std::vector<double> I(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (int k = 0; k <= kmax; ++k) {
    for (int j = 0; j <= k; ++j) {
      I[static_cast<std::size_t>(k)] += binomial(k, j) * std::pow(-d, k - j) * M[static_cast<std::size_t>(j)];
    }
  }
  return I;
}

struct TailFit {
  double alpha = 0.0;
  double beta = 0.0;
};

// Least-squares fit l = alpha + beta d^2 through three samples.
TailFit fit_quadratic_growth(const double d[3], const double l[3]) {
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < 3; ++i) {
    mx += d[i] * d[i] / 3.0;
    my += l[i] / 3.0;
  }
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double x = d[i] * d[i] - mx;
    sxx += x * x;
    sxy += x * (l[i] - my);
  }
  TailFit f;
  f.beta = sxx > 0.0 ? sxy / sxx : 0.0;
  f.alpha = my - f.beta * mx;
  return f;
}

double basepoint_time(const MaterialFlow& flow, const Basepoint& base) {
  return base.at_singular_time ? flow.history().singular_time : base.time;
}

}  // namespace

ReducedVolumeSample reduced_volume(const MaterialFlow& flow, const Basepoint& base, double tbar,
                                   const ReducedVolumeOptions& options) {
  const int n = flow.n();
  const double T = basepoint_time(flow, base);
  const double tau = T - tbar;
  if (!(tau > 0.0)) throw std::invalid_argument("reduced_volume needs tbar before the basepoint time");
  const MaterialFlow::Frame F = flow.frame(tbar);
  const double sp = flow.position(base.label, F);
  const double D = options.width * std::sqrt(tau);
  double a, b;
  bool pole_a = false, pole_b = false;
  if (flow.periodic()) {
    const double half = std::min(D, 0.5 * F.length);
    a = sp - half;
    b = sp + half;
  } else {
    a = std::max(sp - D, flow.s_front(F));
    b = std::min(sp + D, flow.s_back(F));
    pole_a = flow.pole_front() && a <= flow.s_front(F);
    pole_b = flow.pole_back() && b >= flow.s_back(F);
  }
  const int K = std::max(5, options.q_points);
  ReducedVolumeSample out;
  out.time = tbar;
  out.labels.resize(static_cast<std::size_t>(K));
  out.s.resize(static_cast<std::size_t>(K));
  out.l.assign(static_cast<std::size_t>(K), kNaN);
  out.v.assign(static_cast<std::size_t>(K), 0.0);
  out.converged.assign(static_cast<std::size_t>(K), 0);
  for (int i = 0; i < K; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    out.s[u] = a + (b - a) * i / (K - 1);
    out.labels[u] = flow.label_at(out.s[u], F);
  }
  if (pole_a) out.labels.front() = flow.label_min();
  if (pole_b) out.labels.back() = flow.label_max();

  ReducedDistance rd(flow, base, options.l);
  outward_sweep(rd, out.s.size(), closest(out.s, sp), [&](std::size_t i) {
    const ReducedDistanceValue v = rd(out.labels[i], tbar);
    out.l[i] = v.l;
    out.converged[i] = v.converged;
  });

  const double pre = std::pow(4.0 * std::numbers::pi * tau, -0.5 * n);
  const double omega = unit_sphere_volume(n - 1);
  const double h = (b - a) / (K - 1);
  std::vector<double> psi(static_cast<std::size_t>(K)), dpsi(static_cast<std::size_t>(K));
  double total = 0.0, loose = 0.0;
  for (std::size_t i = 0; i < out.s.size(); ++i) {
    const MaterialSample ms = flow.at(out.labels[i], F);
    psi[i] = ms.psi;
    dpsi[i] = ms.psi_x / ms.s_x;
    out.v[i] = pre * std::exp(-out.l[i]);
    const double w = (i == 0 || i + 1 == out.s.size()) ? 0.5 * h : h;
    const double c = w * out.v[i] * omega * std::pow(std::max(psi[i], 0.0), n - 1);
    total += c;
    if (!out.converged[i]) loose += c;
  }
  // Tails beyond non-pole window ends.
  auto tail = [&](bool back) {
    const std::size_t e = back ? out.s.size() - 1 : 0;
    const std::size_t i1 = back ? e - 1 : 1, i2 = back ? e - 2 : 2;
    const double d[3] = {std::abs(out.s[e] - sp), std::abs(out.s[i1] - sp), std::abs(out.s[i2] - sp)};
    const double l[3] = {out.l[e], out.l[i1], out.l[i2]};
    const TailFit fit = fit_quadratic_growth(d, l);
    if (!(fit.beta > 0.0)) {
      out.approximate = true;
      return 0.0;
    }
    const double slope = std::max(0.0, back ? dpsi[e] : -dpsi[e]);
    const std::vector<double> I = gaussian_tail_moments(fit.beta, d[0], n - 1);
    double sum = 0.0;
    for (int k = 0; k <= n - 1; ++k) {
      sum += binomial(n - 1, k) * std::pow(psi[e], n - 1 - k) * std::pow(slope, k) * I[static_cast<std::size_t>(k)];
    }
    return pre * omega * std::exp(-fit.alpha) * sum;
  };
  if (!pole_a) out.tail += tail(false);
  if (!pole_b) out.tail += tail(true);
  out.value = total + out.tail;
  if (loose > options.mass_tolerance * std::max(out.value, 1e-300)) out.approximate = true;
  return out;
}

std::vector<double> ReducedVolumeSeries::times() const {
  std::vector<double> t;
  for (const auto& s : samples) t.push_back(s.time);
  return t;
}

std::vector<double> ReducedVolumeSeries::values() const {
  std::vector<double> v;
  for (const auto& s : samples) v.push_back(s.value);
  return v;
}

ReducedVolumeSeries reduced_volume_series(const MaterialFlow& flow, const Basepoint& base,
                                          const std::vector<double>& times, const ReducedVolumeOptions& options) {
  ReducedVolumeSeries series;
  series.base = base;
  series.base.time = basepoint_time(flow, base);
  for (double t : times) series.samples.push_back(reduced_volume(flow, base, t, options));
  return series;
}

std::vector<double> density_times(const MaterialFlow& flow, const Basepoint& base, double delta, int max_samples) {
  const FlowHistory& h = flow.history();
  const double T = basepoint_time(flow, base);
  const double guard = base.at_singular_time ? 4.0 * (T - h.last_time()) : 0.0;
  if (!(delta > 0.0)) delta = 0.5 * (T - h.first_time());
  const double floor = base.at_singular_time ? 64.0 * guard : delta * std::ldexp(1.0, -max_samples);
  std::vector<double> times;
  for (int k = 0; k < max_samples; ++k) {
    const double tau = delta * std::ldexp(1.0, -k);
    if (tau < floor) break;
    times.push_back(T - tau);
  }
  return times;
}

MonotonicityReport monotonicity_check(const ReducedVolumeSeries& series, const MonotonicityOptions& options,
                                      const MaterialFlow* flow, double soliton_tolerance) {
  MonotonicityReport r;
  r.options = options;
  const std::vector<double> v = series.values();
  if (v.size() < 4) throw std::invalid_argument("monotonicity_check needs at least 4 samples");
  double lo = v.front(), hi = v.front();
  bool increasing = true;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    r.worst_decrease = std::max(r.worst_decrease, v[k] - v[k + 1]);
    if (!(v[k + 1] > v[k])) increasing = false;
    lo = std::min(lo, v[k + 1]);
    hi = std::max(hi, v[k + 1]);
  }
  r.nondecreasing = r.worst_decrease <= options.slack;
  r.max_value = hi;
  r.bounded = hi <= 1.0 + options.bound_tolerance;
  r.spread = hi - lo;
  r.constant = r.spread <= options.constancy_tolerance;
  r.strictly_increasing = increasing && v.back() - v.front() > options.constancy_tolerance;

  if (r.constant && flow != nullptr) {
    // Constant reduced volume forces (g, l) to be a shrinking soliton.
    const ReducedVolumeSample& smp = series.samples[series.samples.size() / 2];
    const MaterialFlow::Frame F = flow->frame(smp.time);
    SolitonStructure st;
    st.singular_time = series.base.time;
    WarpedMetric& g = st.metric;
    g.n = flow->n();
    g.time = smp.time;
    const bool pa = flow->pole_front() && smp.labels.front() <= flow->label_min();
    const bool pb = flow->pole_back() && smp.labels.back() >= flow->label_max();
    const bool mirror = pb && !pa;
    g.topology = pa && pb ? Topology::SphereClosed : (pa || pb) ? Topology::EuclideanFlat : Topology::CylinderInfinite;
    const std::size_t m = smp.s.size();
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = mirror ? m - 1 - j : j;
      g.s.push_back(mirror ? smp.s.back() - smp.s[i] : smp.s[i]);
      g.psi.push_back(flow->at(smp.labels[i], F).psi);
      st.potential.push_back(smp.l[i]);
      st.potential_rate.push_back(0.0);
    }
    if (pa || pb) g.psi.front() = 0.0;
    if (pa && pb) g.psi.back() = 0.0;
    const SolitonResidual res = soliton_residual(st);
    r.soliton_checked = true;
    r.soliton_equation = (st.singular_time - g.time) * res.equation;
    r.soliton_normalization = res.normalization;
    r.soliton_passes = r.soliton_equation <= soliton_tolerance && r.soliton_normalization <= soliton_tolerance;
  }
  return r;
}

SubsolutionReport subsolution_check(const MaterialFlow& flow, const Basepoint& base, const SubsolutionRegion& region,
                                    const LOptions& options, double tolerance) {
  const int n = flow.n();
  const int Q = std::max(2, region.q_cells), K = std::max(2, region.t_cells);
  std::vector<double> q(static_cast<std::size_t>(Q) + 1), t(static_cast<std::size_t>(K) + 1);
  const double hx = (region.label_hi - region.label_lo) / Q;
  const double ht = (region.time_hi - region.time_lo) / K;
  for (int i = 0; i <= Q; ++i) q[static_cast<std::size_t>(i)] = region.label_lo + hx * i;
  for (int k = 0; k <= K; ++k) t[static_cast<std::size_t>(k)] = region.time_lo + ht * k;

  SubsolutionReport r;
  r.tolerance = tolerance;
  r.field = reduced_distance_field(flow, base, q, t, options);
  const double T = r.field.base.time;
  auto v = [&](std::size_t k, std::size_t i) {
    return std::pow(4.0 * std::numbers::pi * (T - t[k]), -0.5 * n) * std::exp(-r.field.l[k][i]);
  };
  double vmax = -kInf, amax = 0.0;
  r.box.assign(t.size(), std::vector<double>(q.size(), kNaN));
  for (std::size_t k = 1; k < static_cast<std::size_t>(K); ++k) {
    const MaterialFlow::Frame F = flow.frame(t[k]);
    const double tau = T - t[k];
    for (std::size_t i = 1; i < static_cast<std::size_t>(Q); ++i) {
      const MaterialSample ms = flow.at(q[i], F);
      const bool near_base = std::abs(q[i] - base.label) < 2.0 * hx;
      bool ok = ms.psi > 0.0 && !near_base;
      for (std::size_t kk = k - 1; kk <= k + 1; ++kk) {
        for (std::size_t ii = i - 1; ii <= i + 1; ++ii) ok = ok && r.field.converged[kk][ii];
      }
      if (!ok) {
        ++r.excluded;
        continue;
      }
      const double vx = (v(k, i + 1) - v(k, i - 1)) / (2.0 * hx);
      const double vxx = (v(k, i + 1) - 2.0 * v(k, i) + v(k, i - 1)) / (hx * hx);
      const double vs = vx / ms.s_x;
      const double vss = (vxx - vs * ms.s_xx) / (ms.s_x * ms.s_x);
      const double lap = vss + (n - 1) * (ms.psi_x / ms.s_x) / ms.psi * vs;
      const double vt = (v(k + 1, i) - v(k - 1, i)) / (2.0 * ht);
      const double box = (-vt - lap + ms.scalar * v(k, i)) * std::pow(tau, 0.5 * n + 1.0);
      r.box[k][i] = box;
      vmax = std::max(vmax, box);
      amax = std::max(amax, std::abs(box));
      ++r.points;
    }
  }
  r.max_value = r.points > 0 ? vmax : kNaN;
  r.max_abs = r.points > 0 ? amax : kNaN;
  r.passes = r.points > 0 && vmax <= tolerance;
  return r;
}

RefinementStudy subsolution_refinement(const MaterialFlow& flow, const Basepoint& base, SubsolutionRegion region,
                                       LOptions options, int levels) {
  RefinementStudy study;
  for (int level = 0; level < levels; ++level) {
    study.reports.push_back(subsolution_check(flow, base, region, options));
    region.q_cells *= 2;
    region.t_cells *= 2;
    options.nodes *= 2;
    options.min_nodes *= 2;
  }
  const auto& coarse = study.reports.front().box;
  auto node = [&](std::size_t level, std::size_t k, std::size_t i) {
    const std::size_t stride = std::size_t{1} << level;
    return study.reports[level].box[k * stride][i * stride];
  };
  for (std::size_t level = 0; level < study.reports.size(); ++level) {
    double worst = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      for (std::size_t i = 0; i < coarse[k].size(); ++i) {
        bool shared = true;
        for (std::size_t r = 0; r < study.reports.size(); ++r) shared = shared && std::isfinite(node(r, k, i));
        if (!shared) continue;
        worst = std::max(worst, std::abs(node(level, k, i)));
        any = true;
      }
    }
    study.max_abs.push_back(any ? worst : kNaN);
  }
  for (std::size_t i = 0; i + 1 < study.max_abs.size(); ++i) {
    study.ratios.push_back(study.max_abs[i] / study.max_abs[i + 1]);
  }
  return study;
}

NaberEnvelope naber_envelope(const MaterialFlow& flow, const ReducedDistanceField& field) {
  NaberEnvelope e;
  const double T = field.base.time;
  const std::size_t nt = field.times.size(), nq = field.labels.size();
  e.k_quadratic = e.k_gradient = e.k_time = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    const MaterialFlow::Frame F = flow.frame(field.times[k]);
    const double tau = T - field.times[k];
    const double sp = flow.position(field.base.label, F);
    for (std::size_t i = 0; i < nq; ++i) {
      if (!field.converged[k][i]) continue;
      const MaterialSample ms = flow.at(field.labels[i], F);
      const double l = field.l[k][i];
      const double rho = 1.0 + std::abs(ms.s - sp) / std::sqrt(tau);
      const double quad = std::max(l / (rho * rho), 0.5 * (-l + std::sqrt(l * l + 4.0 * rho * rho)));
      e.need_quadratic.push_back(quad);
      e.k_quadratic = std::max(e.k_quadratic, quad);
      ++e.samples;
      if (i == 0 || i + 1 == nq || k == 0 || k + 1 == nt) continue;
      if (!field.converged[k][i - 1] || !field.converged[k][i + 1] || !field.converged[k - 1][i] ||
          !field.converged[k + 1][i]) {
        continue;
      }
      const double lx = (field.l[k][i + 1] - field.l[k][i - 1]) / (field.labels[i + 1] - field.labels[i - 1]);
      const double grad = std::abs(lx) / ms.s_x;
      const double lt = (field.l[k + 1][i] - field.l[k - 1][i]) / (field.times[k + 1] - field.times[k - 1]);
      const double g_need = grad * std::sqrt(tau) / rho;
      const double t_need = std::abs(lt) * tau / (rho * rho);
      e.need_gradient.push_back(g_need);
      e.need_time.push_back(t_need);
      e.k_gradient = std::max(e.k_gradient, g_need);
      e.k_time = std::max(e.k_time, t_need);
    }
  }
  e.k_fit = std::max({e.k_quadratic, e.k_gradient, e.k_time});
  e.finite = e.samples > 0 && std::isfinite(e.k_fit);
  return e;
}

std::string_view to_string(GapVerdict v) {
  switch (v) {
    case GapVerdict::Regular: return "Regular";
    case GapVerdict::Singular: return "Singular";
    case GapVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

DensityEstimate density(const MaterialFlow& flow, double p, const DensityOptions& options) {
  const FlowHistory& h = flow.history();
  Basepoint base;
  base.label = p;
  if (h.singular()) {
    base.at_singular_time = true;
    base.time = h.singular_time;
  } else {
    base.time = h.last_time();
  }
  DensityEstimate d;
  d.eta = options.eta;
  d.margin = options.margin;
  const std::vector<double> times = density_times(flow, base, options.delta, options.max_samples);
  if (times.size() < 3) throw std::invalid_argument("density needs at least 3 samples before the basepoint time");
  d.series = reduced_volume_series(flow, base, times, options.volume);
  const std::vector<double> v = d.series.values();
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    if (v[k] - v[k + 1] > options.monotone_slack) {
      throw SolverInconsistency("reduced volume decreases by " + std::to_string(v[k] - v[k + 1]) + " at tbar = " +
                                std::to_string(times[k + 1]));
    }
  }
  d.lower_bound = v.back();
  // Affine model V = theta + c (T - tbar) on the last three samples.
  const std::size_t m = v.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = m - 3; k < m; ++k) {
    mx += (d.series.base.time - times[k]) / 3.0;
    my += v[k] / 3.0;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = m - 3; k < m; ++k) {
    const double x = d.series.base.time - times[k] - mx;
    sxx += x * x;
    sxy += x * (v[k] - my);
  }
  const double slope = sxy / sxx;
  d.theta = my - slope * mx;
  double ss = 0.0;
  for (std::size_t k = m - 3; k < m; ++k) {
    const double r = v[k] - (d.theta + slope * (d.series.base.time - times[k]));
    ss += r * r;
  }
  d.fit_residual = std::sqrt(ss / 3.0);
  if (d.theta > 1.0 - options.eta) {
    d.verdict = GapVerdict::Regular;
  } else if (d.theta < 1.0 - options.eta - options.margin) {
    d.verdict = GapVerdict::Singular;
  } else {
    d.verdict = GapVerdict::Inconclusive;
  }
  return d;
}

}  // namespace rflab
