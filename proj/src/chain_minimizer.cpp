#include "rflab/chain_minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rflab {

namespace {

struct Assembled {
  double value = 0.0;
  std::vector<double> g;     // size N+1, end entries unused
  std::vector<double> diag;  // size N+1
  std::vector<double> off;   // off[j] couples j and j+1
};

Assembled assemble(const LinkFunction& link, const std::vector<double>& x) {
  const std::size_t nodes = x.size();
  Assembled a;
  a.g.assign(nodes, 0.0);
  a.diag.assign(nodes, 0.0);
  a.off.assign(nodes, 0.0);
  for (std::size_t j = 0; j + 1 < nodes; ++j) {
    const LinkEnergy e = link(j, x[j], x[j + 1]);
    a.value += e.value;
    a.g[j] += e.ga;
    a.g[j + 1] += e.gb;
    a.diag[j] += e.haa;
    a.diag[j + 1] += e.hbb;
    a.off[j] += e.hab;
  }
  return a;
}

// Solves the tridiagonal system restricted to free interior nodes. Returns
// false on a non-positive pivot (Hessian not positive definite).
bool solve_free(const Assembled& a, const std::vector<char>& free_node, double mu,
                std::vector<double>& step) {
  const std::size_t nodes = a.g.size();
  step.assign(nodes, 0.0);
  std::vector<double> c(nodes, 0.0), d(nodes, 0.0);
  double prev_c = 0.0, prev_d = 0.0;
  bool prev_free = false;
  for (std::size_t j = 1; j + 1 < nodes; ++j) {
    if (!free_node[j]) {
      prev_free = false;
      continue;
    }
    const double scale = std::max(std::abs(a.diag[j]), 1e-300);
    const double diag = a.diag[j] + mu * scale;
    const double lower = prev_free ? a.off[j - 1] : 0.0;
    const double upper = free_node[j + 1] && j + 2 < nodes ? a.off[j] : 0.0;
    const double pivot = diag - lower * prev_c;
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
    c[j] = upper / pivot;
    d[j] = (-a.g[j] - lower * prev_d) / pivot;
    prev_c = c[j];
    prev_d = d[j];
    prev_free = true;
  }
  for (std::size_t j = nodes - 2; j >= 1; --j) {
    if (!free_node[j]) continue;
    const double next = (j + 2 < nodes && free_node[j + 1]) ? step[j + 1] : 0.0;
    step[j] = d[j] - c[j] * next;
  }
  return true;
}

}  // namespace

double chain_energy(const LinkFunction& link, const std::vector<double>& x) {
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j) total += link(j, x[j], x[j + 1]).value;
  return total;
}

ChainResult minimize_chain(const LinkFunction& link, std::vector<double> x0,
                           const std::vector<double>& lower, const std::vector<double>& upper,
                           const ChainOptions& options) {
  const std::size_t nodes = x0.size();
  if (nodes < 2 || lower.size() != nodes || upper.size() != nodes) {
    throw std::invalid_argument("minimize_chain: inconsistent node arrays");
  }
  for (std::size_t j = 1; j + 1 < nodes; ++j) x0[j] = std::clamp(x0[j], lower[j], upper[j]);

  ChainResult result;
  result.x = std::move(x0);
  if (nodes == 2) {
    result.value = chain_energy(link, result.x);
    result.converged = true;
    return result;
  }

  double mu = 1e-8;
  std::vector<double> step;
  std::vector<char> free_node(nodes, 0);
  Assembled a = assemble(link, result.x);
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    // Active set: nodes pinned at a bound with the gradient pushing outward.
    double gnorm = 0.0;
    for (std::size_t j = 1; j + 1 < nodes; ++j) {
      const bool at_lo = result.x[j] <= lower[j] && a.g[j] > 0.0;
      const bool at_hi = result.x[j] >= upper[j] && a.g[j] < 0.0;
      free_node[j] = !(at_lo || at_hi);
      if (free_node[j]) gnorm = std::max(gnorm, std::abs(a.g[j]));
    }
    result.gradient_norm = gnorm;
    result.value = a.value;
    const double gtol = options.gradient_tolerance * (1.0 + std::abs(a.value));
    if (gnorm <= gtol) {
      result.converged = true;
      return result;
    }
    // Undamped Newton decrement below the resolution of the energy.
    if (solve_free(a, free_node, 0.0, step)) {
      double decrement = 0.0;
      for (std::size_t j = 1; j + 1 < nodes; ++j) decrement -= a.g[j] * step[j];
      if (decrement <= options.decrement_tolerance * (1.0 + std::abs(a.value))) {
        result.converged = true;
        return result;
      }
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      if (!solve_free(a, free_node, mu, step)) {
        mu = std::max(mu * 10.0, 1e-6);
        continue;
      }
      double alpha = 1.0;
      double slope = 0.0;
      for (std::size_t j = 1; j + 1 < nodes; ++j) slope += a.g[j] * step[j];
      for (int ls = 0; ls < 30; ++ls) {
        std::vector<double> trial = result.x;
        for (std::size_t j = 1; j + 1 < nodes; ++j) {
          trial[j] = std::clamp(result.x[j] + alpha * step[j], lower[j], upper[j]);
        }
        Assembled ta = assemble(link, trial);
        if (std::isfinite(ta.value) && ta.value <= a.value + 1e-4 * alpha * std::min(slope, 0.0)) {
          const double change = a.value - ta.value;
          result.x = std::move(trial);
          a = std::move(ta);
          accepted = true;
          mu = alpha == 1.0 ? std::max(mu * 0.1, 1e-12) : mu;
          if (change <= options.value_tolerance * (1.0 + std::abs(a.value))) {
            // Stalled at rounding level: stationary if the gradient is also small.
            double g2 = 0.0;
            for (std::size_t j = 1; j + 1 < nodes; ++j) {
              if (free_node[j]) g2 = std::max(g2, std::abs(a.g[j]));
            }
            if (g2 <= 1e3 * options.gradient_tolerance * (1.0 + std::abs(a.value))) {
              result.value = a.value;
              result.gradient_norm = g2;
              result.converged = true;
              return result;
            }
          }
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) mu = std::max(mu * 10.0, 1e-6);
    }
    if (!accepted) break;
  }
  result.value = a.value;
  double gnorm = 0.0;
  for (std::size_t j = 1; j + 1 < nodes; ++j) {
    const bool at_lo = result.x[j] <= lower[j] && a.g[j] > 0.0;
    const bool at_hi = result.x[j] >= upper[j] && a.g[j] < 0.0;
    if (!(at_lo || at_hi)) gnorm = std::max(gnorm, std::abs(a.g[j]));
  }
  result.gradient_norm = gnorm;
  result.converged = gnorm <= options.gradient_tolerance * (1.0 + std::abs(a.value));
  return result;
}

}  // namespace rflab
