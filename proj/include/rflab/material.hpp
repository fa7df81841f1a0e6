#pragma once

#include <vector>

#include "rflab/flow.hpp"
#include "rflab/spline.hpp"

namespace rflab {

/// Fields of a flow at one material point, with derivatives in the label x
/// (the t = 0 arclength of the point).
struct MaterialSample {
  double s = 0.0;
  double s_x = 0.0;
  double s_xx = 0.0;
  double psi = 0.0;
  double psi_x = 0.0;
  double scalar = 0.0;
  double scalar_x = 0.0;
  double scalar_xx = 0.0;
  double riem = 0.0;
};

/// A FlowHistory viewed in material coordinates. Each snapshot is splined
/// in x. In time, positions and logs of positive fields are interpolated
/// through four neighbouring snapshots in log(T-hat - t) (in t without a
/// singular time), so self-similar shrinkers and static regions are both
/// reproduced exactly; outside the recorded range the end pair extrapolates.
class MaterialFlow {
 public:
  struct Frame {
    std::size_t k = 0;  // bracketing pair [k, k+1]
    double w = 0.0;
    std::size_t first = 0;  // snapshots first .. first + count - 1 carry `weight`
    int count = 1;
    double weight[4] = {1.0, 0.0, 0.0, 0.0};
    double time = 0.0;
    double origin = 0.0;
    double length = 0.0;
  };

  explicit MaterialFlow(const FlowHistory& history);

  const FlowHistory& history() const { return *history_; }
  int n() const { return history_->n(); }
  Topology topology() const { return topology_; }
  bool periodic() const { return topology_ == Topology::CylinderPeriodic; }
  bool pole_front() const { return pole_front_; }
  bool pole_back() const { return pole_back_; }
  double label_min() const { return label_min_; }
  double label_max() const { return label_max_; }
  double label_period() const { return label_period_; }

  Frame frame(double t) const;
  MaterialSample at(double x, const Frame& f) const;
  MaterialSample at(double x, double t) const { return at(x, frame(t)); }
  double position(double x, const Frame& f) const;

  /// Label of the point at arclength coordinate s.
  double label_at(double s, const Frame& f) const;
  /// Axis coordinate range [first, last] at the frame time.
  double s_front(const Frame& f) const;
  double s_back(const Frame& f) const;
  /// Distance along the meridian (periodic: along the unwrapped axis).
  double distance(double x, double y, const Frame& f) const;
  /// Clamps a label into the material domain (identity on periodic axes).
  double clamp_label(double x) const;

 private:
  struct Slice {
    double origin = 0.0;
    double length = 0.0;
    double first = 0.0;  // label of node 0 (periodic base)
    CubicSpline u;       // (s - origin) / length
    CubicSpline psi;
    CubicSpline scalar;
    CubicSpline riem;
  };
  struct Column {
    double value;
    double d1;
    double d2;
  };
  void evaluate(const Slice& sl, double x, Column& u, Column& psi, Column& scalar, double& riem) const;

  const FlowHistory* history_;
  Topology topology_;
  bool pole_front_ = false;
  bool pole_back_ = false;
  double label_min_ = 0.0;
  double label_max_ = 0.0;
  double label_period_ = 0.0;
  std::vector<Slice> slices_;
};

}  // namespace rflab
