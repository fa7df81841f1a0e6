#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rflab/flow.hpp"

namespace rflab {

struct ClassificationOptions {
  std::size_t points = 65;  // material labels, uniform in the t = 0 arclength
  double rho = 1e-2;        // rate floor for scaled curvature
  /// g(0)-radius of the largest neighbourhood; halved `halvings` times.
  double r0 = kNaN;  // default: 1/16 of the axis length at t = 0
  int halvings = 4;
  double min_decades = 3.0;
  /// Snapshots with T - t <= final_window * (T - t_last) form the final window.
  double final_window = 10.0;
};

struct SingularPoint {
  double label = 0.0;
  bool in_scalar = false;   // Sigma_R
  bool in_riem = false;     // Sigma_Rm
  bool in_special = false;  // Sigma_s
  bool in_essential = false;  // Sigma_I
  bool in_singular = false;   // Sigma
  /// min over the final window of R (T-t) and |Rm| (T-t) at the point.
  double rate_scalar = 0.0;
  double rate_riem = 0.0;
  double max_rate_riem = 0.0;
  /// sup over the run of |Rm| on each nested neighbourhood (largest first).
  std::vector<double> ball_bounds;
  /// (T - t_last) sup |Rm| on each nested neighbourhood.
  std::vector<double> ball_rates;
};

struct SingularSetReport {
  std::vector<SingularPoint> points;
  double rho = 1e-2;
  double scalar_floor = 0.0;  // rho * scalar_to_riem_bound(n)
  double r0 = 0.0;
  int halvings = 4;
  double singular_time = kNaN;
  double decades = 0.0;
  std::size_t window_begin = 0;  // first snapshot of the final window
  bool reliable = false;
  std::string status;

  bool nested() const;
  std::size_t count(int set) const;  // 0 = Sigma_R ... 4 = Sigma
};

/// Discrete membership tests on a singular history. Each later set is
/// obtained from a weaker test on the same samples, so the nesting
/// Sigma_R in Sigma_Rm in Sigma_s in Sigma_I in Sigma holds by construction.
SingularSetReport classify_singular_points(const FlowHistory& history, const ClassificationOptions& options = {});

struct CoincidenceVerdict {
  std::size_t disagreements = 0;
  std::size_t interior_violations = 0;
  std::vector<std::size_t> violating_points;
  int boundary_cells = 2;
  bool passes = false;
};

/// Points whose five flags differ are allowed only within `boundary_cells`
/// classification cells of a Sigma_R boundary.
CoincidenceVerdict verify_coincidence(const SingularSetReport& report, int boundary_cells = 2);

struct RhoStability {
  double rho_low = 0.0;
  double rho_high = 0.0;
  bool same_emptiness = false;
  bool peak_member = false;  // the point of largest final rate is in every Sigma_R
  bool coincidence = false;
  bool stable = false;
};

/// Repeats the classification at rho / sqrt(10) and rho * sqrt(10).
RhoStability rho_stability(const FlowHistory& history, const ClassificationOptions& options = {});

struct SigmaRkLevel {
  int k = 0;
  std::vector<double> labels;           // members of Sigma_{R,k}
  std::vector<double> times;            // checked snapshot times
  std::vector<double> shell_volume;     // Vol_t(Sigma_{R,k} \ Sigma_{R,k-1})
  std::vector<double> shell_bound;      // 2 e^{C T} (T - t)^{1/k} Vol_0(shell)
  double shell_volume0 = 0.0;
  double worst_integral_margin = 0.0;   // min of int R - lower bound
  bool integral_bound = true;
  bool volume_bound = true;
};

struct SigmaRkDecomposition {
  double scalar_lower = 0.0;  // C-tilde
  std::vector<SigmaRkLevel> levels;
  bool holds = true;
};

SigmaRkDecomposition sigma_rk_decomposition(const FlowHistory& history, const SingularSetReport& report,
                                            int k_max = 16);

struct VolumeDecay {
  std::vector<double> times;
  std::vector<double> volumes;
  double initial = 0.0;
  double final_ratio = kNaN;  // Vol(t_last) / Vol(0)
  double exponent = kNaN;     // d log Vol / d log(T - t) over the final window
  bool decays = false;        // final_ratio < limit_fraction
  double limit_fraction = 1e-2;
};

/// Volume of a set of material cells at every snapshot. `mask` selects
/// report points; each point owns the label cell around it.
VolumeDecay volume_decay(const FlowHistory& history, const SingularSetReport& report,
                         const std::vector<char>& mask, double limit_fraction = 1e-2);
std::vector<char> membership_mask(const SingularSetReport& report, int set);

struct RescaledHistory {
  double lambda = 1.0;
  double base_label = 0.0;
  double singular_time = 0.0;  // of the original
  FlowHistory history;         // times T-hat + t / lambda mapped to t
  double curvature_scaling_error = 0.0;  // max | lambda |Rm_j| - |Rm| | / sup|Rm| per snapshot
  double type_one_constant = 0.0;        // sup (-t) |Rm_j|
  bool type_one_bound = false;           // <= C_fit of the original
};

/// g_j(t) = lambda g(T-hat + t / lambda); labels scale with sqrt(lambda), so
/// the base point sits at label sqrt(lambda) * base_label.
RescaledHistory parabolic_rescale(const FlowHistory& history, double lambda, double base_label);

enum class ShrinkerFamily { Sphere, Cylinder, Flat };
std::string_view to_string(ShrinkerFamily f);

struct ProfileSample {
  double lambda = 0.0;
  double time = 0.0;  // original time T-hat - 1 / lambda
  double window = 4.0;
  bool window_shrunk = false;
  bool extrapolated = false;  // time past the last snapshot
  /// sup over the window of the sectional-curvature mismatch at t = -1.
  double distance[3] = {0.0, 0.0, 0.0};
  ShrinkerFamily best = ShrinkerFamily::Flat;
  double scalar = 0.0;  // R (T-hat - t) at the basepoint
  double riem = 0.0;    // |Rm| (T-hat - t) at the basepoint
  std::vector<double> sigma;  // rescaled arclength from the basepoint
  std::vector<double> psi;    // rescaled profile
  std::vector<double> model;  // best-fit shrinker profile
};

struct ProfileComparison {
  double base_label = 0.0;
  std::vector<ProfileSample> samples;
  ShrinkerFamily family = ShrinkerFamily::Flat;
  /// Intercepts of least-squares fits in 1 / log(lambda (T - t_first)).
  double scalar_limit = kNaN;
  double riem_limit = kNaN;
  double distance_limit = kNaN;
  bool nontrivial = false;  // riem_limit >= rho
  double rho = 1e-2;
};

/// Default schedule: lambda = 1 / (T - t_k) over the final window snapshots.
std::vector<double> default_lambdas(const FlowHistory& history, double final_window = 10.0);

ProfileComparison blowup_profile(const FlowHistory& history, double base_label, const std::vector<double>& lambdas,
                                 double window = 4.0, double rho = 1e-2);

}  // namespace rflab
