#include "rflab/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Label table of one snapshot with periodic wrapping.
class SnapshotLabels {
 public:
  SnapshotLabels(const FlowHistory& h, std::size_t k)
      : labels_(&h.labels[k]), metric_(&h.snapshots[k]), periodic_(h.snapshots[k].topology == Topology::CylinderPeriodic),
        period_(periodic_ ? h.snapshots.front().period : 0.0) {}

  // Linear interpolation of a nodal field at label x.
  double interpolate(const std::vector<double>& f, double x) const {
    const std::vector<double>& L = *labels_;
    const std::size_t m = L.size();
    if (periodic_) {
      x -= period_ * std::floor((x - L.front()) / period_);
      if (x >= L.back()) {
        const double w = (x - L.back()) / (L.front() + period_ - L.back());
        return (1.0 - w) * f.back() + w * f.front();
      }
    } else {
      if (x <= L.front()) return f.front();
      if (x >= L.back()) return f.back();
    }
    const auto it = std::upper_bound(L.begin(), L.end(), x);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - L.begin()), m - 1);
    const double w = (x - L[i - 1]) / (L[i] - L[i - 1]);
    return (1.0 - w) * f[i - 1] + w * f[i];
  }

  double position(double x) const {
    if (!periodic_) return interpolate(metric_->s, x);
    const std::vector<double>& L = *labels_;
    const double turns = std::floor((x - L.front()) / period_);
    const double base = x - turns * period_;
    double s;
    if (base >= L.back()) {
      const double w = (base - L.back()) / (L.front() + period_ - L.back());
      s = (1.0 - w) * metric_->s.back() + w * (metric_->s.front() + metric_->period);
    } else {
      s = interpolate(metric_->s, base);
    }
    return s + turns * metric_->period;
  }

  // Largest nodal value of f within label distance r of x (endpoints included).
  double ball_max(const std::vector<double>& f, double x, double r) const {
    double best = std::max({interpolate(f, x), interpolate(f, x - r), interpolate(f, x + r)});
    const std::vector<double>& L = *labels_;
    for (std::size_t i = 0; i < L.size(); ++i) {
      double d = std::abs(L[i] - x);
      if (periodic_) d = std::abs(d - period_ * std::round(d / period_));
      if (d <= r) best = std::max(best, f[i]);
    }
    return best;
  }

  double period() const { return period_; }

 private:
  const std::vector<double>* labels_;
  const WarpedMetric* metric_;
  bool periodic_;
  double period_;
};

double label_period(const FlowHistory& h) {
  const WarpedMetric& g = h.snapshots.front();
  return g.topology == Topology::CylinderPeriodic ? g.period : 0.0;
}

std::vector<double> classification_labels(const FlowHistory& h, std::size_t count) {
  const std::vector<double>& L = h.labels.front();
  const double P = label_period(h);
  const double lo = L.front();
  const double span = P > 0.0 ? P : L.back() - L.front();
  const std::size_t cells = P > 0.0 ? count : count - 1;
  std::vector<double> x(count);
  for (std::size_t i = 0; i < count; ++i) x[i] = lo + span * static_cast<double>(i) / static_cast<double>(cells);
  return x;
}

double label_spacing(const SingularSetReport& r) {
  return r.points.size() < 2 ? 0.0 : r.points[1].label - r.points[0].label;
}

struct Fit {
  double intercept = 0.0;
  double slope = 0.0;
};

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double N = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / N;
    my += y[i] / N;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Fit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace

bool SingularSetReport::nested() const {
  for (const SingularPoint& p : points) {
    if (p.in_scalar && !p.in_riem) return false;
    if (p.in_riem && !p.in_special) return false;
    if (p.in_special && !p.in_essential) return false;
    if (p.in_essential && !p.in_singular) return false;
  }
  return true;
}

std::size_t SingularSetReport::count(int set) const {
  const std::vector<char> m = membership_mask(*this, set);
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
}

std::vector<char> membership_mask(const SingularSetReport& report, int set) {
  std::vector<char> m;
  for (const SingularPoint& p : report.points) {
    const bool flags[5] = {p.in_scalar, p.in_riem, p.in_special, p.in_essential, p.in_singular};
    m.push_back(flags[std::clamp(set, 0, 4)] ? 1 : 0);
  }
  return m;
}

SingularSetReport classify_singular_points(const FlowHistory& history, const ClassificationOptions& options) {
  SingularSetReport rep;
  rep.rho = options.rho;
  rep.halvings = options.halvings;
  const int n = history.n();
  rep.scalar_floor = options.rho * scalar_to_riem_bound(n);
  if (!history.singular()) {
    rep.status = "no singular time";
    return rep;
  }
  const double T = history.singular_time;
  rep.singular_time = T;
  const std::size_t K = history.size();
  const double tau_first = T - history.first_time(), tau_last = T - history.last_time();
  rep.decades = std::log10(tau_first / tau_last);
  const WarpedMetric& g0 = history.snapshots.front();
  rep.r0 = options.r0 > 0.0 ? options.r0 : g0.length() / 16.0;

  std::size_t wb = K - 1;
  while (wb > 0 && T - history.snapshots[wb - 1].time <= options.final_window * tau_last) --wb;
  rep.window_begin = wb;
  const std::size_t window = K - wb;
  rep.reliable = rep.decades >= options.min_decades && window >= 5;
  rep.status = rep.reliable ? "reliable"
                            : (rep.decades < options.min_decades ? "classification unreliable: fewer decades than required"
                                                                 : "classification unreliable: final window too short");

  // Sub-windows: four chunks of the final window before the last sample,
  // then the last sample alone.
  const int groups = options.halvings + 1;
  std::vector<std::size_t> group_of(K, 0);
  for (std::size_t k = wb; k + 1 < K; ++k) {
    group_of[k] = std::min<std::size_t>(static_cast<std::size_t>(groups - 2),
                                        (k - wb) * static_cast<std::size_t>(groups - 1) / std::max<std::size_t>(1, window - 1));
  }
  group_of[K - 1] = static_cast<std::size_t>(groups - 1);

  std::vector<SnapshotLabels> snaps;
  for (std::size_t k = 0; k < K; ++k) snaps.emplace_back(history, k);

  for (double x : classification_labels(history, std::max<std::size_t>(options.points, 3))) {
    SingularPoint p;
    p.label = x;
    p.rate_scalar = kInf;
    p.rate_riem = kInf;
    p.ball_bounds.assign(static_cast<std::size_t>(groups), 0.0);
    p.ball_rates.assign(static_cast<std::size_t>(groups), 0.0);
    std::vector<char> special(static_cast<std::size_t>(groups), 0), essential(static_cast<std::size_t>(groups), 0);
    for (std::size_t k = 0; k < K; ++k) {
      const CurvatureField& c = history.curvatures[k];
      const double tau = T - history.snapshots[k].time;
      for (int j = 0; j < groups; ++j) {
        const double r = rep.r0 * std::ldexp(1.0, -j);
        const double m = snaps[k].ball_max(c.riem_norm, x, r);
        p.ball_bounds[static_cast<std::size_t>(j)] = std::max(p.ball_bounds[static_cast<std::size_t>(j)], m);
        if (k == K - 1) p.ball_rates[static_cast<std::size_t>(j)] = tau * m;
        if (k >= wb && static_cast<int>(group_of[k]) == j && tau * m >= options.rho) essential[static_cast<std::size_t>(j)] = 1;
      }
      if (k < wb) continue;
      const double rs = tau * snaps[k].interpolate(c.scalar, x);
      const double rm = tau * snaps[k].interpolate(c.riem_norm, x);
      p.rate_scalar = std::min(p.rate_scalar, rs);
      p.rate_riem = std::min(p.rate_riem, rm);
      p.max_rate_riem = std::max(p.max_rate_riem, rm);
      if (rm >= options.rho) special[group_of[k]] = 1;
    }
    p.in_scalar = p.rate_scalar >= rep.scalar_floor;
    p.in_riem = p.rate_riem >= options.rho;
    p.in_special = std::all_of(special.begin(), special.end(), [](char v) { return v != 0; });
    p.in_essential = std::all_of(essential.begin(), essential.end(), [](char v) { return v != 0; });
    p.in_singular = p.ball_rates.back() >= options.rho;
    rep.points.push_back(std::move(p));
  }
  return rep;
}

CoincidenceVerdict verify_coincidence(const SingularSetReport& report, int boundary_cells) {
  CoincidenceVerdict v;
  v.boundary_cells = boundary_cells;
  const std::size_t m = report.points.size();
  std::vector<std::size_t> edges;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (report.points[i].in_scalar != report.points[i + 1].in_scalar) edges.push_back(i);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const SingularPoint& p = report.points[i];
    const bool agree = p.in_scalar == p.in_riem && p.in_riem == p.in_special && p.in_special == p.in_essential &&
                       p.in_essential == p.in_singular;
    if (agree) continue;
    ++v.disagreements;
    bool near_edge = false;
    for (std::size_t e : edges) {
      // Edge e sits between points e and e+1.
      const double d = i <= e ? static_cast<double>(e - i) : static_cast<double>(i - e - 1);
      if (d < boundary_cells) near_edge = true;
    }
    if (!near_edge) {
      ++v.interior_violations;
      v.violating_points.push_back(i);
    }
  }
  v.passes = report.reliable && v.interior_violations == 0;
  return v;
}

RhoStability rho_stability(const FlowHistory& history, const ClassificationOptions& options) {
  RhoStability s;
  s.rho_low = options.rho / std::sqrt(10.0);
  s.rho_high = options.rho * std::sqrt(10.0);
  const SingularSetReport base = classify_singular_points(history, options);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < base.points.size(); ++i) {
    if (base.points[i].rate_riem > base.points[peak].rate_riem) peak = i;
  }
  s.same_emptiness = true;
  s.peak_member = true;
  s.coincidence = verify_coincidence(base).passes;
  for (double rho : {s.rho_low, s.rho_high}) {
    ClassificationOptions o = options;
    o.rho = rho;
    const SingularSetReport r = classify_singular_points(history, o);
    if ((r.count(0) == 0) != (base.count(0) == 0)) s.same_emptiness = false;
    if (base.count(0) > 0 && !r.points[peak].in_scalar) s.peak_member = false;
    if (!verify_coincidence(r).passes) s.coincidence = false;
  }
  s.stable = s.same_emptiness && s.peak_member && s.coincidence;
  return s;
}

namespace {

// Volume at snapshot k of the label cells owned by masked points.
double masked_volume(const FlowHistory& h, const SnapshotLabels& snap, std::size_t k, const SingularSetReport& report,
                     const std::vector<char>& mask) {
  const std::vector<double>& L0 = h.labels.front();
  const double P = label_period(h);
  const double half = 0.5 * label_spacing(report);
  double total = 0.0;
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    if (!mask[i]) continue;
    double a = report.points[i].label - half, b = report.points[i].label + half;
    if (P == 0.0) {
      a = std::max(a, L0.front());
      b = std::min(b, L0.back());
    }
    total += volume(h.snapshots[k], snap.position(a), snap.position(b));
  }
  return total;
}

}  // namespace

SigmaRkDecomposition sigma_rk_decomposition(const FlowHistory& history, const SingularSetReport& report, int k_max) {
  SigmaRkDecomposition d;
  if (!history.singular() || report.points.empty()) {
    d.holds = false;
    return d;
  }
  const double T = history.singular_time;
  const double t_first = history.first_time();
  const std::size_t K = history.size();
  d.scalar_lower = std::max(0.0, -history.curvatures.front().min_scalar());
  if (k_max <= 0) k_max = std::max(16, 2 * static_cast<int>(std::ceil(1.0 / (T - t_first))));

  std::vector<SnapshotLabels> snaps;
  for (std::size_t k = 0; k < K; ++k) snaps.emplace_back(history, k);
  const std::size_t m = report.points.size();
  // rate[i][k] = R (T - t) and integral[i][k] = int_{t_first}^{t_k} R dt,
  // trapezoidal in -log(T - t) where R (T - t) is smooth.
  std::vector<std::vector<double>> rate(m, std::vector<double>(K)), integral(m, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      const double tau = T - history.snapshots[k].time;
      rate[i][k] = tau * snaps[k].interpolate(history.curvatures[k].scalar, report.points[i].label);
      if (k > 0) {
        const double tau_prev = T - history.snapshots[k - 1].time;
        integral[i][k] = integral[i][k - 1] + 0.5 * (rate[i][k - 1] + rate[i][k]) * std::log(tau_prev / tau);
      }
    }
  }

  std::vector<char> previous(m, 0);
  for (int k = 1; k <= k_max; ++k) {
    SigmaRkLevel lev;
    lev.k = k;
    const double inv = 1.0 / k;
    std::size_t kw = 0;
    while (kw < K && T - history.snapshots[kw].time > inv) ++kw;
    std::vector<char> member(m, 0), shell(m, 0);
    if (kw < K) {
      for (std::size_t i = 0; i < m; ++i) {
        bool in = true;
        for (std::size_t j = kw; j < K && in; ++j) in = rate[i][j] >= inv;
        member[i] = in ? 1 : 0;
        shell[i] = member[i] && !previous[i];
        if (member[i]) lev.labels.push_back(report.points[i].label);
      }
    }
    // The bound with the window (T - 1/k, T) needs the whole window inside
    // the run; otherwise the window starts at the first snapshot in it.
    const bool admissible = inv <= T - t_first;
    const double tw = kw < K ? history.snapshots[kw].time : T;
    lev.worst_integral_margin = kInf;
    lev.shell_volume0 = masked_volume(history, snaps.front(), 0, report, shell);
    for (std::size_t j = kw; j < K; ++j) {
      const double t = history.snapshots[j].time;
      const double tau = T - t;
      for (std::size_t i = 0; i < m; ++i) {
        if (!member[i]) continue;
        const double lower = -d.scalar_lower * (tw - t_first) + inv * std::log((T - tw) / tau);
        const double margin = integral[i][j] - lower;
        lev.worst_integral_margin = std::min(lev.worst_integral_margin, margin);
        if (margin < -1e-6 * (1.0 + std::abs(lower))) lev.integral_bound = false;
      }
      const double vol = masked_volume(history, snaps[j], j, report, shell);
      const double bound = admissible
                               ? 2.0 * std::exp(d.scalar_lower * T) * std::pow(tau, inv) * lev.shell_volume0
                               : std::exp(d.scalar_lower * (tw - t_first)) * std::pow(tau / (T - tw), inv) * lev.shell_volume0;
      lev.times.push_back(t);
      lev.shell_volume.push_back(vol);
      lev.shell_bound.push_back(bound);
      if (vol > bound) lev.volume_bound = false;
    }
    if (!(lev.worst_integral_margin < kInf)) lev.worst_integral_margin = 0.0;
    d.holds = d.holds && lev.integral_bound && lev.volume_bound;
    previous = member;
    d.levels.push_back(std::move(lev));
  }
  return d;
}

VolumeDecay volume_decay(const FlowHistory& history, const SingularSetReport& report, const std::vector<char>& mask,
                         double limit_fraction) {
  VolumeDecay v;
  v.limit_fraction = limit_fraction;
  const std::size_t K = history.size();
  for (std::size_t k = 0; k < K; ++k) {
    const SnapshotLabels snap(history, k);
    v.times.push_back(history.snapshots[k].time);
    v.volumes.push_back(masked_volume(history, snap, k, report, mask));
  }
  v.initial = v.volumes.front();
  if (v.initial > 0.0) {
    v.final_ratio = v.volumes.back() / v.initial;
    v.decays = v.final_ratio < limit_fraction;
  } else {
    v.final_ratio = 0.0;
    v.decays = true;
  }
  if (history.singular() && v.initial > 0.0) {
    std::vector<double> lx, ly;
    for (std::size_t k = report.window_begin; k < K; ++k) {
      if (!(v.volumes[k] > 0.0)) continue;
      lx.push_back(std::log(history.singular_time - v.times[k]));
      ly.push_back(std::log(v.volumes[k]));
    }
    if (lx.size() >= 2) v.exponent = least_squares(lx, ly).slope;
  }
  return v;
}

RescaledHistory parabolic_rescale(const FlowHistory& history, double lambda, double base_label) {
  if (!(lambda > 0.0)) throw std::invalid_argument("parabolic_rescale needs lambda > 0");
  if (!history.singular()) throw std::invalid_argument("parabolic_rescale needs a singular time");
  RescaledHistory r;
  r.lambda = lambda;
  r.base_label = base_label;
  r.singular_time = history.singular_time;
  const double a = std::sqrt(lambda);
  for (std::size_t k = 0; k < history.size(); ++k) {
    WarpedMetric g = history.snapshots[k];
    for (double& s : g.s) s *= a;
    for (double& p : g.psi) p *= a;
    g.period *= a;
    g.time = lambda * (g.time - history.singular_time);
    std::vector<double> labels = history.labels[k];
    for (double& x : labels) x *= a;
    r.history.push(std::move(g), std::move(labels));
  }
  r.history.status = history.status;
  r.history.initial_data = history.initial_data;
  r.history.singular_time = 0.0;
  r.history.estimate = history.estimate;
  r.history.estimate.time = 0.0;
  r.history.estimate.rate = history.estimate.rate;
  r.history.type_one = type_one_constants(r.history, 0.0);

  const double C = history.type_one.upper;
  for (std::size_t k = 0; k < history.size(); ++k) {
    const CurvatureField& c0 = history.curvatures[k];
    const CurvatureField& c1 = r.history.curvatures[k];
    const double minus_t = -r.history.snapshots[k].time;
    const double scale = c0.sup_riem();
    for (std::size_t i = 0; i < c0.riem_norm.size(); ++i) {
      r.curvature_scaling_error =
          std::max(r.curvature_scaling_error, std::abs(lambda * c1.riem_norm[i] - c0.riem_norm[i]) / scale);
    }
    r.type_one_constant = std::max(r.type_one_constant, minus_t * c1.sup_riem());
  }
  r.type_one_bound = std::isfinite(C) && r.type_one_constant <= C * (1.0 + 1e-9);
  return r;
}

std::string_view to_string(ShrinkerFamily f) {
  switch (f) {
    case ShrinkerFamily::Sphere: return "Sphere";
    case ShrinkerFamily::Cylinder: return "Cylinder";
    case ShrinkerFamily::Flat: return "Flat";
  }
  return "?";
}

std::vector<double> default_lambdas(const FlowHistory& history, double final_window) {
  std::vector<double> out;
  if (!history.singular()) return out;
  const double T = history.singular_time;
  const double tau_last = T - history.last_time();
  for (const WarpedMetric& g : history.snapshots) {
    const double tau = T - g.time;
    if (tau <= final_window * tau_last) out.push_back(1.0 / tau);
  }
  return out;
}

ProfileComparison blowup_profile(const FlowHistory& history, double base_label, const std::vector<double>& lambdas,
                                 double window, double rho) {
  if (!history.singular()) throw std::invalid_argument("blowup_profile needs a singular time");
  ProfileComparison out;
  out.base_label = base_label;
  out.rho = rho;
  const int n = history.n();
  const double T = history.singular_time;
  // Sectional curvatures of the shrinkers at t = -1.
  const double k_sphere = 1.0 / (2.0 * (n - 1));
  const double k_cyl = n > 2 ? 1.0 / (2.0 * (n - 2)) : kInf;
  const double model_rad[3] = {k_sphere, 0.0, 0.0};
  const double model_sph[3] = {k_sphere, k_cyl, 0.0};
  for (double lambda : lambdas) {
    ProfileSample smp;
    smp.lambda = lambda;
    smp.time = T - 1.0 / lambda;
    smp.window = window;
    smp.extrapolated = smp.time > history.last_time();
    const WarpedMetric g = history.metric_at(smp.time);
    const std::vector<double> labels = history.labels_at(smp.time);
    FlowHistory one;
    one.push(g, labels);
    const SnapshotLabels snap(one, 0);
    const CurvatureField& c = one.curvatures.front();
    const double sp = snap.position(base_label);
    const double a = std::sqrt(lambda);
    const double reach = window / a;
    const bool periodic = g.topology == Topology::CylinderPeriodic;
    if (!periodic) {
      const bool short_front = sp - reach < g.s.front() && !g.has_pole_front();
      const bool short_back = sp + reach > g.s.back() && !g.has_pole_back();
      if (short_front || short_back) {
        smp.window_shrunk = true;
        double room = kInf;
        if (short_front) room = std::min(room, sp - g.s.front());
        if (short_back) room = std::min(room, g.s.back() - sp);
        smp.window = a * room;
      }
    }
    for (double& dist : smp.distance) dist = 0.0;
    auto at_s = [&](const std::vector<double>& f, double x) {
      if (periodic) {
        x = g.s.front() + std::fmod(std::fmod(x - g.s.front(), g.period) + g.period, g.period);
        if (x >= g.s.back()) {
          const double w = (x - g.s.back()) / (g.s.front() + g.period - g.s.back());
          return (1.0 - w) * f.back() + w * f.front();
        }
      }
      x = std::clamp(x, g.s.front(), g.s.back());
      const auto it = std::upper_bound(g.s.begin(), g.s.end(), x);
      const std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - g.s.begin()), 1, g.size() - 1);
      const double w = (x - g.s[i - 1]) / (g.s[i] - g.s[i - 1]);
      return (1.0 - w) * f[i - 1] + w * f[i];
    };
    constexpr int kSamples = 64;
    for (int i = 0; i <= kSamples; ++i) {
      const double sigma = smp.window * (2.0 * i / kSamples - 1.0);
      const double x = sp + sigma / a;
      if (!periodic && (x < g.s.front() || x > g.s.back())) continue;
      const double kr = at_s(c.k_radial, x) / lambda, ks = at_s(c.k_sphere, x) / lambda;
      for (int f = 0; f < 3; ++f) {
        smp.distance[f] = std::max({smp.distance[f], std::abs(kr - model_rad[f]), std::abs(ks - model_sph[f])});
      }
      smp.sigma.push_back(sigma);
      smp.psi.push_back(a * at_s(g.psi, x));
    }
    int best = 0;
    for (int f = 1; f < 3; ++f) {
      if (smp.distance[f] < smp.distance[best]) best = f;
    }
    smp.best = static_cast<ShrinkerFamily>(best);
    smp.scalar = snap.interpolate(c.scalar, base_label) / lambda;
    smp.riem = snap.interpolate(c.riem_norm, base_label) / lambda;

    // Model profile through the basepoint for export.
    const double psi0 = snap.interpolate(g.psi, base_label) * a;
    const double slope0 = snap.interpolate(profile_derivatives(g).d1, base_label);
    const double radius = std::sqrt(2.0 * (n - 1));
    double offset = radius * std::asin(std::min(1.0, psi0 / radius));
    if (slope0 < 0.0) offset = std::numbers::pi * radius - offset;
    for (double sigma : smp.sigma) {
      switch (smp.best) {
        case ShrinkerFamily::Sphere: smp.model.push_back(radius * std::sin((sigma + offset) / radius)); break;
        case ShrinkerFamily::Cylinder: smp.model.push_back(std::sqrt(2.0 * (n - 2))); break;
        case ShrinkerFamily::Flat: smp.model.push_back(std::abs(psi0 + (slope0 < 0.0 ? -sigma : sigma))); break;
      }
    }
    out.samples.push_back(std::move(smp));
  }
  if (out.samples.empty()) return out;

  // Limits: least squares in 1 / log of the blow-up factor relative to the
  // run length, the rate at which necks approach the cylinder.
  const double span = T - history.first_time();
  out.family = out.samples.back().best;
  const int fam = static_cast<int>(out.family);
  std::vector<double> x, ys, yr, yd;
  for (const ProfileSample& s : out.samples) {
    const double growth = s.lambda * span;
    if (!(growth > 1.0)) continue;
    x.push_back(1.0 / std::log(growth));
    ys.push_back(s.scalar);
    yr.push_back(s.riem);
    yd.push_back(s.distance[fam]);
  }
  if (x.size() >= 2) {
    out.scalar_limit = least_squares(x, ys).intercept;
    out.riem_limit = least_squares(x, yr).intercept;
    out.distance_limit = std::max(0.0, least_squares(x, yd).intercept);
  } else {
    out.scalar_limit = out.samples.back().scalar;
    out.riem_limit = out.samples.back().riem;
    out.distance_limit = out.samples.back().distance[fam];
  }
  out.nontrivial = out.riem_limit >= rho;
  return out;
}

}  // namespace rflab
