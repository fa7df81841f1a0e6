#pragma once

#include <string_view>
#include <vector>

#include "rflab/geometry.hpp"

namespace rflab {

enum class ExactFamily { ShrinkingSphere, ShrinkingCylinder, GaussianFlat };

std::string_view to_string(ExactFamily f);
/// Accepts the CLI names "sphere", "cylinder", "gaussian".
ExactFamily family_from_name(std::string_view name);

class UnsupportedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Closed-form Ricci flow of one of the round shrinkers.
///   sphere:   radius^2 = 2(n-1)(T-t)
///   cylinder: fiber radius^2 = 2(n-2)(T-t), static axis
///   gaussian: static flat R^n
struct ExactFlow {
  ExactFamily family = ExactFamily::ShrinkingSphere;
  int n = 3;
  double singular_time = 1.0;
  /// Cylinder axis circumference and flat outer radius of the discrete domain.
  double cylinder_period = 24.0;
  double flat_radius = 12.0;

  /// Radius of the sphere or the cylinder fiber (unused for gaussian).
  double radius(double t) const;
  /// Metric sampled on `points` grid nodes.
  WarpedMetric evaluate(double t, std::size_t points) const;
  /// Material label of grid coordinate s at time t (its arclength at t = 0).
  double material_label(double s, double t) const;
  double sup_riem(double t) const;
  double scalar(double t) const;
};

ExactFlow make_exact_flow(ExactFamily family, int n, double singular_time);

/// Gradient shrinking soliton in canonical form sampled at one time.
/// `potential_rate` holds df/dt at fixed material points.
struct SolitonStructure {
  WarpedMetric metric;
  std::vector<double> potential;
  std::vector<double> potential_rate;
  double singular_time = 1.0;
};

SolitonStructure soliton_potential(ExactFamily family, int n, double singular_time, double t,
                                   std::size_t points = 801);
SolitonStructure soliton_potential(const ExactFlow& flow, double t, std::size_t points = 801);

struct SolitonResidual {
  /// Sup of |Ric + Hess f - g/(2(T-t))| over both eigen-directions.
  double equation = 0.0;
  /// Sup of |(T-t)(R + |grad f|^2) - f|.
  double normalization = 0.0;
  /// Sup of |df/dt - |grad f|^2|.
  double time_coupling = 0.0;
  std::vector<double> equation_pointwise;
  std::vector<double> normalization_pointwise;
  std::vector<double> time_coupling_pointwise;
};

SolitonResidual soliton_residual(const SolitonStructure& structure);

enum class RigidityVerdict { StrictlyPositiveR, FlatGaussian, Violation };
std::string_view to_string(RigidityVerdict v);

struct RigidityResult {
  RigidityVerdict verdict = RigidityVerdict::Violation;
  double min_scaled_scalar = 0.0;  // min R (T-t)
  double max_scaled_riem = 0.0;    // max |Rm| (T-t)
};

/// Nonnegative scalar curvature, and flatness wherever R vanishes.
RigidityResult rigidity_probe(const SolitonStructure& structure, double tolerance = 1e-5);

inline constexpr double kSolitonResidualTolerance = 1e-5;

}  // namespace rflab
