#pragma once

#include <functional>
#include <vector>

#include "cnls/grid.hpp"

namespace cnls {

/// Ray maximum of a functional J along t -> J(t w).
struct FiberValue {
  double t = 0.0;      // maximiser t*
  double value = 0.0;  // J(t* w)
};

/// Functional of the form J(z) = 1/2 <z, (-Lap + V) z> - sum w_i G(x_i, z_i)
/// whose ray maximum Psi(w) = max_t J(t w) is minimised by fiber_descent.
class FiberObjective {
 public:
  virtual ~FiberObjective() = default;

  virtual const GridPtr& grid() const = 0;
  /// Ray maximum; throws a degenerate-candidate or candidate error when the
  /// ray has no interior maximum.
  virtual FiberValue fiber(const FieldPair& w) const = 0;
  /// Gradient r = (-Lap + V) z - grad G(z) node by node (zero on pinned
  /// nodes). Returns its max norm.
  virtual double residual(const FieldPair& z, FieldPair& r) const = 0;
  /// p = (-Lap + V)^{-1} r, or a spectrally equivalent operator.
  virtual void precondition(const FieldPair& r, FieldPair& p) const = 0;
};

struct DescentOptions {
  double tol = 1e-8;
  int max_iter = 5000;
  double armijo = 1e-4;
  /// Optional per-iteration observer (iteration, residual, value, iterate).
  std::function<void(int, double, double, const FieldPair&)> observer;
};

struct DescentResult {
  FieldPair z;  // on the ray maximum, t*(z) = 1
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Preconditioned steepest descent on Psi with the clamp w -> (w+) and Armijo
/// backtracking; every accepted iterate is rescaled onto its ray maximum.
/// Throws NonConvergence when max_iter is exhausted or the line search stalls.
DescentResult fiber_descent(const FiberObjective& objective, FieldPair init, const DescentOptions& options);

/// Weighted inner product sum_i w_i (a.u_i b.u_i + a.v_i b.v_i).
double weighted_dot(const std::vector<double>& weights, const FieldPair& a, const FieldPair& b);

}  // namespace cnls
