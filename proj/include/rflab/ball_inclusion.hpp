#pragma once

#include <cstdint>
#include <vector>

#include "rflab/flow.hpp"

namespace rflab {

struct BallInclusionOptions {
  /// Fiber angles of the tested points relative to p's meridian.
  std::vector<double> angles{0.0, 3.141592653589793};
  std::size_t curves = 128;
  int curve_vertices = 6;
  int quadrature = 32;  // midpoint samples per curve segment
  std::uint64_t seed = 1;
  /// Relative slack on both the inclusion and the length inequality.
  double tolerance = 1e-8;
};

struct BallInclusionSample {
  double time = 0.0;
  double inner_radius = 0.0;  // e^{-Mt} r
  std::size_t points = 0;     // grid points inside the g(0) ball
  double max_distance = 0.0;  // their largest g(t)-distance from p
  double max_ric = 0.0;       // sup |Ric| over the g(t) ball of radius r
  bool precondition = false;
  bool holds = false;
};

struct LengthDistortion {
  std::size_t curves = 0;
  /// max over curves and times of Length_t / (e^{Mt} Length_0).
  double worst_ratio = 0.0;
  bool holds = false;
};

struct BallInclusionCheck {
  double label = 0.0;
  double radius = 0.0;
  double bound = 0.0;  // M
  bool precondition_holds = false;
  std::vector<BallInclusionSample> samples;
  LengthDistortion lengths;
  /// Every sample where the precondition holds includes the shrunken ball.
  bool holds = false;
};

/// Checks B_{g(0)}(p, e^{-Mt} r) inside B_{g(t)}(p, r) at every snapshot,
/// with points tracked by material label, and the length bound
/// Length_{g(t)} <= e^{Mt} Length_{g(0)} on seeded random curves in the
/// smallest inner ball.
BallInclusionCheck ball_inclusion_check(const FlowHistory& history, double p, double r, double M,
                                        const BallInclusionOptions& options = {});

}  // namespace rflab
