#include "rflab/ball_inclusion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rflab/material.hpp"

namespace rflab {

namespace {

struct CurveVertex {
  double label;
  double angle;
};

// Length of the curve that is piecewise straight in (label, angle).
double curve_length(const MaterialFlow& flow, const MaterialFlow::Frame& f, const std::vector<CurveVertex>& c,
                    int quadrature) {
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < c.size(); ++j) {
    const double dx = c[j + 1].label - c[j].label, da = c[j + 1].angle - c[j].angle;
    for (int k = 0; k < quadrature; ++k) {
      const double lambda = (k + 0.5) / quadrature;
      const MaterialSample ms = flow.at(c[j].label + lambda * dx, f);
      total += std::hypot(ms.s_x * dx, ms.psi * da) / quadrature;
    }
  }
  return total;
}

}  // namespace

BallInclusionCheck ball_inclusion_check(const FlowHistory& history, double p, double r, double M,
                                        const BallInclusionOptions& options) {
  if (!(r > 0.0) || !(M >= 0.0)) throw std::invalid_argument("ball_inclusion_check needs r > 0 and M >= 0");
  const MaterialFlow flow(history);
  BallInclusionCheck out;
  out.label = p;
  out.radius = r;
  out.bound = M;

  const double t0 = history.first_time();
  const WarpedMetric& g0 = history.snapshots.front();
  const MaterialFlow::Frame f0 = flow.frame(t0);
  const double sp0 = flow.position(p, f0);
  struct Candidate {
    double label;
    double angle;
    double d0;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < g0.size(); ++i) {
    if (std::abs(g0.s[i] - sp0) > r && !flow.periodic()) continue;
    for (double a : options.angles) {
      const double d0 = distance(g0, {sp0, 0.0}, {g0.s[i], a});
      if (d0 <= r) candidates.push_back({history.labels.front()[i], a, d0});
    }
  }

  out.precondition_holds = true;
  out.holds = true;
  for (std::size_t k = 0; k < history.size(); ++k) {
    const WarpedMetric& g = history.snapshots[k];
    const CurvatureField& c = history.curvatures[k];
    const double t = g.time - t0;
    const MaterialFlow::Frame f = flow.frame(g.time);
    const double sp = flow.position(p, f);
    BallInclusionSample smp;
    smp.time = g.time;
    smp.inner_radius = std::exp(-M * t) * r;
    // Points on other meridians are no closer than their axis offset, so
    // the axis band bounds the ball.
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g.s[i] - sp) > r) continue;
      smp.max_ric = std::max({smp.max_ric, std::abs(c.ric_radial[i]), std::abs(c.ric_sphere[i])});
    }
    smp.precondition = smp.max_ric <= M * (1.0 + options.tolerance);
    for (const Candidate& q : candidates) {
      if (q.d0 > smp.inner_radius) continue;
      ++smp.points;
      smp.max_distance = std::max(smp.max_distance, distance(g, {sp, 0.0}, {flow.position(q.label, f), q.angle}));
    }
    smp.holds = smp.max_distance <= r * (1.0 + options.tolerance);
    out.precondition_holds = out.precondition_holds && smp.precondition;
    if (smp.precondition && !smp.holds) out.holds = false;
    out.samples.push_back(smp);
  }

  // Random curves inside the ball shrunk for the final time.
  const double t_end = history.last_time() - t0;
  const double inner = std::exp(-M * t_end) * r;
  const double x_lo = flow.clamp_label(flow.label_at(sp0 - inner, f0));
  const double x_hi = flow.clamp_label(flow.label_at(sp0 + inner, f0));
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> ux(x_lo, x_hi), ua(-0.5, 0.5);
  LengthDistortion& ld = out.lengths;
  ld.holds = true;
  for (std::size_t n = 0; n < options.curves; ++n) {
    std::vector<CurveVertex> curve(static_cast<std::size_t>(std::max(2, options.curve_vertices)));
    for (CurveVertex& v : curve) v = {ux(rng), ua(rng)};
    const double len0 = curve_length(flow, f0, curve, options.quadrature);
    if (!(len0 > 0.0)) continue;
    ++ld.curves;
    for (std::size_t k = 1; k < history.size(); ++k) {
      if (!out.samples[k].precondition) continue;
      const double t = history.snapshots[k].time;
      const double ratio = curve_length(flow, flow.frame(t), curve, options.quadrature) / (std::exp(M * (t - t0)) * len0);
      ld.worst_ratio = std::max(ld.worst_ratio, ratio);
    }
  }
  ld.holds = ld.curves > 0 && ld.worst_ratio <= 1.0 + options.tolerance;
  return out;
}

}  // namespace rflab
