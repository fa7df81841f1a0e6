#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rflab/chain_minimizer.hpp"
#include "rflab/material.hpp"

namespace rflab {

class SolverInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Space-time basepoint. `label` is a material label; when `at_singular_time`
/// is set the time is the history's singular time and l is obtained as a
/// limit of basepoints approaching it.
struct Basepoint {
  double label = 0.0;
  double time = 0.0;
  bool at_singular_time = false;
};

Basepoint singular_basepoint(const FlowHistory& history, double label);

struct LOptions {
  /// Curve links N. For singular-time basepoints this caps the coarsest
  /// extrapolation level; each further level doubles it.
  int nodes = 64;
  int min_nodes = 32;
  int levels = 4;
  int starts = 3;
  std::uint64_t seed = 1;
  /// Amplitude of the perturbed starts relative to the curve's extent.
  double perturbation = 0.25;
  ChainOptions chain{400, 1e-11, 1e-15};
};

/// Discrete minimizer of L(gamma) = int sqrt(t0 - t) (|gamma'|^2 + R) dt from
/// (q, tbar) to (p, t0). Nodes are uniform in u = sqrt(t0 - t); node 0 sits
/// at the basepoint (u = 0) and node N at q. A `horizon` past t0 measures u
/// and the weight from the horizon instead; one extra link then covers the
/// gap to the horizon.
struct LCurve {
  double base_label = 0.0;
  double base_time = 0.0;
  double end_label = 0.0;
  double end_time = 0.0;
  std::vector<double> u;
  std::vector<double> labels;
  double l_value = 0.0;           // L
  double reduced_distance = 0.0;  // l = L / (2 sqrt(t0 - tbar))
  double gradient_norm = 0.0;
  int iterations = 0;
  int best_start = 0;
  bool converged = false;
};

LCurve minimize_L(const MaterialFlow& flow, double p, double t0, double q, double tbar, int nodes,
                  const LOptions& options = {}, const LCurve* warm = nullptr, double horizon = kNaN);
LCurve minimize_L(const FlowHistory& history, double p, double t0, double q, double tbar, int nodes,
                  const LOptions& options = {});

/// Value of l at one (q, tbar), including the singular-time limit.
struct ReducedDistanceValue {
  double l = 0.0;
  bool converged = false;
  /// The finest level needed times past the last snapshot.
  bool extrapolated = false;
  double coarse = 0.0;  // l at the coarsest guard
  double fine = 0.0;    // l at the finest guard
  double guard = 0.0;   // finest-level distance of the curve end from the singular time
  int nodes = 0;        // finest-level links
};

/// Helper that keeps warm-start curves between neighbouring evaluations.
class ReducedDistance {
 public:
  ReducedDistance(const MaterialFlow& flow, Basepoint base, LOptions options = {});
  ReducedDistanceValue operator()(double q, double tbar);
  /// Distance of curve ends from the singular time needed to stay inside the
  /// recorded history: 4 (T-hat - t_last).
  double guard() const { return guard_; }
  void reset_warm_start();

  struct WarmState {
    std::vector<LCurve> curve;
    std::vector<char> valid;
  };
  WarmState warm_state() const;
  void set_warm_state(const WarmState& state);

 private:
  const MaterialFlow* flow_;
  Basepoint base_;
  LOptions options_;
  double guard_ = 0.0;
  std::vector<LCurve> warm_;
  std::vector<char> has_warm_;
};

struct ReducedDistanceField {
  Basepoint base;
  std::vector<double> times;   // tbar values
  std::vector<double> labels;  // q labels
  std::vector<std::vector<double>> l;          // [time][q]
  std::vector<std::vector<char>> converged;    // [time][q]
  std::vector<std::vector<char>> extrapolated; // [time][q]
  double guard = 0.0;
  std::size_t unconverged() const;
};

ReducedDistanceField reduced_distance_field(const MaterialFlow& flow, const Basepoint& base,
                                            const std::vector<double>& q_labels,
                                            const std::vector<double>& times, const LOptions& options = {});

struct ReducedVolumeOptions {
  int q_points = 65;
  /// Half-width of the sampled window in units of sqrt(t0 - tbar).
  double width = 12.0;
  /// Relative mass of unconverged nodes above which a value is approximate.
  double mass_tolerance = 1e-3;
  LOptions l;
};

struct ReducedVolumeSample {
  double time = 0.0;
  double value = 0.0;
  double tail = 0.0;  // analytic tail contribution
  bool approximate = false;
  std::vector<double> labels;
  std::vector<double> s;
  std::vector<double> l;
  std::vector<double> v;
  std::vector<char> converged;
};

/// Vt(tbar) = int (4 pi (t0 - tbar))^{-n/2} e^{-l} dvol_{g(tbar)} by trapezoidal
/// quadrature in s over a window around the basepoint; open or truncated
/// ends add the Gaussian tail of a quadratic fit of l in the distance.
ReducedVolumeSample reduced_volume(const MaterialFlow& flow, const Basepoint& base, double tbar,
                                   const ReducedVolumeOptions& options = {});

struct ReducedVolumeSeries {
  Basepoint base;
  std::vector<ReducedVolumeSample> samples;
  std::vector<double> times() const;
  std::vector<double> values() const;
};

ReducedVolumeSeries reduced_volume_series(const MaterialFlow& flow, const Basepoint& base,
                                          const std::vector<double>& times,
                                          const ReducedVolumeOptions& options = {});

/// tbar_k = T - delta 2^{-k}, k = 0..K, stopping 64 guards short of T.
std::vector<double> density_times(const MaterialFlow& flow, const Basepoint& base, double delta = kNaN,
                                  int max_samples = 12);

struct MonotonicityOptions {
  double slack = 1e-4;             // allowed decrease between samples
  double bound_tolerance = 1e-3;   // Vt <= 1 + tol
  double constancy_tolerance = 1e-3;
};

struct MonotonicityReport {
  bool nondecreasing = false;
  double worst_decrease = 0.0;
  bool bounded = false;
  double max_value = 0.0;
  bool constant = false;
  double spread = 0.0;  // max - min over the samples
  bool strictly_increasing = false;
  /// Soliton residual of (g, l) cross-referenced when the series is constant.
  bool soliton_checked = false;
  bool soliton_passes = false;
  double soliton_equation = kNaN;  // scale-invariant: (T - t) * equation residual
  double soliton_normalization = kNaN;
  MonotonicityOptions options;
};

/// Checks a series for monotonicity and the bound. `flow` and `base` are used
/// for the soliton cross-reference when the samples are constant.
MonotonicityReport monotonicity_check(const ReducedVolumeSeries& series, const MonotonicityOptions& options = {},
                                      const MaterialFlow* flow = nullptr, double soliton_tolerance = 5e-2);

struct SubsolutionRegion {
  double label_lo = 0.0;
  double label_hi = 0.0;
  double time_lo = 0.0;
  double time_hi = 0.0;
  int q_cells = 8;
  int t_cells = 4;
};

struct SubsolutionReport {
  /// Extremes of (t0 - tbar)^{n/2+1} (box* v) over the interior samples; the
  /// prefactor makes the operator scale-invariant.
  double max_value = kNaN;
  double max_abs = kNaN;
  std::size_t points = 0;
  std::size_t excluded = 0;
  double tolerance = 1e-3;
  bool passes = false;
  ReducedDistanceField field;
  /// Scaled box* v per [time][q] node; NaN on edges and excluded nodes.
  std::vector<std::vector<double>> box;
};

SubsolutionReport subsolution_check(const MaterialFlow& flow, const Basepoint& base, const SubsolutionRegion& region,
                                    const LOptions& options = {}, double tolerance = 1e-3);

struct RefinementStudy {
  /// Per level: max |box* v| over the nodes of the coarsest grid, which
  /// every level contains.
  std::vector<double> max_abs;
  std::vector<double> ratios;  // max_abs[r] / max_abs[r+1]
  std::vector<SubsolutionReport> reports;
};

/// Repeats subsolution_check halving both spacings and doubling the curve
/// links at every level.
RefinementStudy subsolution_refinement(const MaterialFlow& flow, const Basepoint& base, SubsolutionRegion region,
                                       LOptions options, int levels = 3);

struct NaberEnvelope {
  double k_fit = kNaN;
  double k_quadratic = kNaN;  // two-sided quadratic bound on l
  double k_gradient = kNaN;
  double k_time = kNaN;
  bool finite = false;
  std::size_t samples = 0;
  /// Per interior sample: the smallest K each bound needs.
  std::vector<double> need_quadratic;
  std::vector<double> need_gradient;
  std::vector<double> need_time;
};

NaberEnvelope naber_envelope(const MaterialFlow& flow, const ReducedDistanceField& field);

enum class GapVerdict { Regular, Singular, Inconclusive };
std::string_view to_string(GapVerdict v);

struct DensityOptions {
  double eta = 0.02;
  double margin = 0.005;
  double delta = kNaN;  // default: half the recorded time span before T-hat
  int max_samples = 12;
  double monotone_slack = 1e-4;
  ReducedVolumeOptions volume;
};

struct DensityEstimate {
  double theta = kNaN;
  double lower_bound = kNaN;
  double fit_residual = kNaN;
  GapVerdict verdict = GapVerdict::Inconclusive;
  std::string model = "affine in (T - tbar), last 3 samples";
  double eta = 0.02;
  double margin = 0.005;
  ReducedVolumeSeries series;
};

/// Density at (p, T-hat), or at (p, t_last) on histories without a singular
/// time. Throws SolverInconsistency on a decrease beyond the slack.
DensityEstimate density(const MaterialFlow& flow, double p, const DensityOptions& options = {});

}  // namespace rflab
