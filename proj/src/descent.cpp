#include "cnls/descent.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cnls/error.hpp"
#include "cnls/linalg.hpp"

namespace cnls {

double weighted_dot(const std::vector<double>& weights, const FieldPair& a, const FieldPair& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] * (a.u[i] * b.u[i] + a.v[i] * b.v[i]);
  }
  return acc;
}

namespace {

void scale(FieldPair& w, double t) {
  for (auto& x : w.u.values) x *= t;
  for (auto& x : w.v.values) x *= t;
}

}  // namespace

DescentResult fiber_descent(const FiberObjective& objective, FieldPair init, const DescentOptions& options) {
  const GridPtr& grid = objective.grid();
  if (init.grid() != grid) fail(ErrorKind::configuration, "descent: initial fields live on another grid");
  const std::size_t n = node_count(*grid);
  const auto weights = cell_weights(*grid);
  std::vector<char> pinned(n);
  for (std::size_t i = 0; i < n; ++i) pinned[i] = is_pinned_node(*grid, i) ? 1 : 0;

  FieldPair z = std::move(init);
  for (std::size_t i = 0; i < n; ++i) {
    z.u[i] = pinned[i] ? 0.0 : std::max(z.u[i], 0.0);
    z.v[i] = pinned[i] ? 0.0 : std::max(z.v[i], 0.0);
  }
  FiberValue fv = objective.fiber(z);
  scale(z, fv.t);
  double value = fv.value;

  FieldPair r = zero_pair(grid);
  FieldPair p = zero_pair(grid);
  FieldPair trial = zero_pair(grid);
  double res = 0.0;
  for (int it = 0;; ++it) {
    res = objective.residual(z, r);
    if (options.observer) options.observer(it, res, value, z);
    if (!std::isfinite(res)) fail(ErrorKind::numeric, "descent: residual became non-finite");
    if (res <= options.tol) return {std::move(z), value, res, it};
    if (it >= options.max_iter) {
      throw NonConvergence(fmt::format("descent did not reach tol {:.3g} in {} iterations (residual {:.3e})",
                                       options.tol, it, res),
                           res, it);
    }
    objective.precondition(r, p);
    const double slope = weighted_dot(weights, r, p);
    const double allowance = 1e-14 * std::abs(value);
    double alpha = 1.0;
    bool accepted = false;
    FiberValue next;
    for (int k = 0; k < 60 && !accepted; ++k, alpha *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) {
        trial.u[i] = pinned[i] ? 0.0 : std::max(z.u[i] - alpha * p.u[i], 0.0);
        trial.v[i] = pinned[i] ? 0.0 : std::max(z.v[i] - alpha * p.v[i], 0.0);
      }
      try {
        next = objective.fiber(trial);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_candidate && e.kind() != ErrorKind::candidate) throw;
        continue;
      }
      accepted = next.value <= value - options.armijo * alpha * slope + allowance;
      if (accepted) break;
    }
    if (!accepted) {
      throw NonConvergence(fmt::format("descent line search stalled at iteration {} (residual {:.3e})", it, res),
                           res, it);
    }
    std::swap(z, trial);
    scale(z, next.t);
    value = next.value;
  }
}

}  // namespace cnls
