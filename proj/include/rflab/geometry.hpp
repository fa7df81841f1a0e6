#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rflab {

/// Global shape of the orbit space carried by a warped metric
/// g = ds^2 + psi(s)^2 g_{S^{n-1}}.
enum class Topology {
  SphereClosed,      // psi vanishes at both ends (two poles)
  CylinderPeriodic,  // periodic axis of length `period`
  CylinderInfinite,  // open axis, both ends free
  EuclideanFlat      // pole at s_0, open outer end (R^n in polar form)
};

std::string_view to_string(Topology t);
Topology topology_from_string(std::string_view name);

class InvalidMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete rotationally symmetric metric snapshot. Values are stored on
/// strictly increasing arclength coordinates; `period` is only meaningful
/// for CylinderPeriodic and is the axis circumference.
struct WarpedMetric {
  int n = 3;
  Topology topology = Topology::SphereClosed;
  std::vector<double> s;
  std::vector<double> psi;
  double time = 0.0;
  double period = 0.0;

  std::size_t size() const { return s.size(); }
  /// Total axis length (period for periodic metrics).
  double length() const;
  bool has_pole_front() const;
  bool has_pole_back() const;
};

/// Throws InvalidMetric unless the metric satisfies the grid and positivity
/// invariants. `grid_floor` bounds every spacing from below.
void validate(const WarpedMetric& metric, double grid_floor = 1e-12);

/// Pointwise curvature of a warped metric. The two sectional curvatures are
/// K_rad = -psi_ss/psi (planes containing d/ds) and
/// K_sph = (1 - psi_s^2)/psi^2 (planes tangent to the fiber).
struct CurvatureField {
  std::vector<double> scalar;
  std::vector<double> riem_norm;
  std::vector<double> ric_radial;
  std::vector<double> ric_sphere;
  std::vector<double> k_radial;
  std::vector<double> k_sphere;

  double sup_riem() const;
  double sup_abs_ric() const;
  double min_scalar() const;
};

/// Norm convention: |Rm|^2 = 4(n-1) K_rad^2 + 2(n-1)(n-2) K_sph^2.
double riem_norm(int n, double k_radial, double k_sphere);
double scalar_curvature(int n, double k_radial, double k_sphere);
/// Largest c with R <= c |Rm| for every pair of sectional curvatures.
double scalar_to_riem_bound(int n);
inline constexpr std::string_view kRiemNormConvention =
    "|Rm|^2 = 4(n-1)K_rad^2 + 2(n-1)(n-2)K_sph^2";

/// Second-order centred differences; pole values come from the odd ghost
/// extension of psi.
CurvatureField curvature_field(const WarpedMetric& metric);

/// First and second s-derivatives of psi with the same stencils as
/// curvature_field (pole entries hold psi_s and psi_sss respectively).
struct ProfileDerivatives {
  std::vector<double> d1;
  std::vector<double> d2;
};
ProfileDerivatives profile_derivatives(const WarpedMetric& metric);

/// A point of the manifold represented in the orbit space: axis coordinate
/// plus an angle along a fixed great circle of the fiber sphere.
struct OrbitPoint {
  double s = 0.0;
  double angle = 0.0;
};

/// Geodesic distance. Exact for pairs on one meridian (equal angles) and
/// for antipodal meridians; other angles use a discrete geodesic search in
/// the (s, angle) surface of revolution.
double distance(const WarpedMetric& metric, OrbitPoint p, OrbitPoint q);

/// Volume of the band a <= s <= b, trapezoidal in s.
double volume(const WarpedMetric& metric, double a, double b);
double total_volume(const WarpedMetric& metric);

/// Volume of the unit (k)-sphere S^k.
double unit_sphere_volume(int k);

/// Linear interpolation of psi at s (periodic wrap where applicable).
double interpolate_psi(const WarpedMetric& metric, double s);

/// Columnar text format:
///   # comment
///   n <int>
///   topology <name>
///   time <double>
///   period <double>      (optional)
///   <s> <psi>            (one row per grid point)
void write_metric(std::ostream& os, const WarpedMetric& metric);
WarpedMetric read_metric(std::istream& is);

}  // namespace rflab
