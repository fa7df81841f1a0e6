#pragma once

#include <functional>
#include <vector>

namespace rflab {

/// Energy of one link of a discrete curve, with its gradient and Hessian in
/// the two endpoint values.
struct LinkEnergy {
  double value = 0.0;
  double ga = 0.0;
  double gb = 0.0;
  double haa = 0.0;
  double hab = 0.0;
  double hbb = 0.0;
};

/// link(j, a, b) is the energy of the link between node j and node j+1.
using LinkFunction = std::function<LinkEnergy(std::size_t, double, double)>;

struct ChainOptions {
  int max_iterations = 200;
  /// Relative to 1 + |energy|.
  double gradient_tolerance = 1e-10;
  double value_tolerance = 1e-14;
  /// Newton decrement, relative to 1 + |energy|, that counts as converged.
  double decrement_tolerance = 1e-13;
};

struct ChainResult {
  std::vector<double> x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes sum_j link(j, x_j, x_{j+1}) over the interior nodes
/// x_1..x_{N-1}; the end nodes stay fixed. Damped (Levenberg) Newton steps
/// on the tridiagonal Hessian with backtracking; nodes are projected onto
/// [lower_j, upper_j].
ChainResult minimize_chain(const LinkFunction& link, std::vector<double> x0,
                           const std::vector<double>& lower, const std::vector<double>& upper,
                           const ChainOptions& options = {});

double chain_energy(const LinkFunction& link, const std::vector<double>& x);

}  // namespace rflab
