#pragma once

#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rflab/geometry.hpp"
#include "rflab/solutions.hpp"

namespace rflab {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class SolverInstability : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlowConfig {
  /// Step cap dt <= sigma / sup|Rm|.
  double sigma = 0.1;
  /// Step-doubling tolerance on the relative sup change of psi per step.
  double tolerance = 1e-8;
  double stop_curvature = 1e6;
  double final_time = std::numeric_limits<double>::infinity();
  int snapshots_per_decade = 16;
  /// Uniform-time snapshot spacing used while curvature does not grow.
  double record_interval = std::numeric_limits<double>::infinity();
  double grid_floor = 1e-12;
  /// Stop when an interior local minimum of psi drops below this many cells.
  double resolution_cells = 0.0;
  double min_step = 1e-15;
  long max_steps = 5'000'000;
};

enum class RunStatus { SingularityReached, ResolutionLimited, FinalTimeReached, StepUnderflow };
std::string_view to_string(RunStatus s);

struct SingularTimeEstimate {
  bool determined = false;
  double time = kNaN;         // T-hat
  double fit_time = kNaN;     // zero of the log-log fit before secant extrapolation
  double rate = kNaN;         // a in sup|Rm| ~ a / (T-hat - t)
  double residual = kNaN;     // rms log-residual of the fit
  double uncertainty = kNaN;  // spread between half-window fits
  double consistency = kNaN;  // |t_last + a / sup|Rm|(t_last) - T-hat|
  double exponent = kNaN;     // p in sup|Rm| ~ (T-hat - t)^-p over the fit window
  std::size_t window_begin = 0;
  std::string note;
};

struct TypeIConstants {
  double upper = kNaN;         // C_fit: sup over recorded times of (T-t) sup|Rm|
  double lower = kNaN;         // c_fit: inf over the final decade
  double lower_all = kNaN;     // inf over every recorded time
  bool lower_bound_ok = false; // c_fit >= 1/8 - tolerance
  bool upper_bounded = false;
};

struct SolverDiagnostics {
  long accepted_steps = 0;
  long rejected_steps = 0;
  double min_step = kNaN;
  double max_step = kNaN;
  double wall_seconds = 0.0;
};

/// Time-ordered snapshots of a rotationally symmetric Ricci flow. Every
/// snapshot also carries material labels: the t = 0 arclength coordinate of
/// the manifold point sitting at each grid node.
struct FlowHistory {
  std::vector<WarpedMetric> snapshots;
  std::vector<CurvatureField> curvatures;
  std::vector<std::vector<double>> labels;
  RunStatus status = RunStatus::FinalTimeReached;
  double singular_time = kNaN;
  SingularTimeEstimate estimate;
  TypeIConstants type_one;
  SolverDiagnostics diagnostics;
  std::string initial_data;

  std::size_t size() const { return snapshots.size(); }
  int n() const { return snapshots.front().n; }
  double first_time() const { return snapshots.front().time; }
  double last_time() const { return snapshots.back().time; }
  bool singular() const { return singular_time == singular_time; }

  void push(WarpedMetric metric, std::vector<double> label);

  /// Snapshot pair [k, k+1] around t and the blend weight w used by
  /// metric_at (w outside [0, 1] extrapolates).
  struct TimeBracket {
    std::size_t k = 0;
    double w = 0.0;
  };
  TimeBracket bracket(double t) const;

  /// Metric at an arbitrary time inside the recorded range. Between
  /// snapshots, lengths and psi are interpolated log-linearly in
  /// log(T-hat - t) when a singular time is known (exact on the round
  /// shrinkers), linearly in t otherwise.
  WarpedMetric metric_at(double t) const;
  std::vector<double> labels_at(double t) const;
};

/// Semi-implicit Ricci flow of psi in arclength gauge
///   psi_t = psi_ss - (n-2)(1 - psi_s^2)/psi,
/// with fourth-order stencils, arclength regridding after each step and
/// step-doubling error control. Records snapshots geometrically in sup|Rm|.
FlowHistory evolve(const WarpedMetric& initial, const FlowConfig& config);

/// Fits log sup|Rm| against log(T-hat - t) over the final recorded decade,
/// then extrapolates the drift of secant zeros of 1/sup|Rm| to its limit.
SingularTimeEstimate estimate_singular_time(const FlowHistory& history, double max_residual = 0.05);

TypeIConstants type_one_constants(const FlowHistory& history, double singular_time, double tolerance = 1e-3);

/// Dumbbell on S^n: s in [0, pi*scale],
///   psi(s) = scale * sin(s/scale) * (c + (1-c) cos^2(s/scale)),
/// smooth at both poles, neck radius c*scale at the equator.
WarpedMetric dumbbell_profile(int n, double neck_ratio, std::size_t points, double scale = 1.0);
std::string dumbbell_description(double neck_ratio, double scale);

/// Text archive of a history: header lines, then one block per snapshot.
/// Curvatures and the singular-time fit are recomputed on reading; the
/// stored singular time is kept.
void write_history(std::ostream& os, const FlowHistory& history);
FlowHistory read_history(std::istream& is);

/// Exact flow sampled at a geometric schedule in (T - t).
FlowHistory sample_exact_history(const ExactFlow& flow, std::size_t points, double tau_min,
                                 int per_decade = 16, double t_start = 0.0);

}  // namespace rflab
