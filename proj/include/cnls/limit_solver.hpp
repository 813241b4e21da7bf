#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cnls/grid.hpp"
#include "cnls/model.hpp"

namespace cnls {

/// Constant-coefficient system
///   -Lap u + aP u = mu1 u^3 + beta u v^2,  -Lap v + bP v = mu2 v^3 + beta u^2 v.
struct LimitProblem {
  double aP = 1.0;
  double bP = 1.0;
  CouplingParams params;
  GridPtr grid;
  /// Threshold of the active potentials; vector solves need beta > beta0.
  std::optional<double> beta0;
};

/// Least-squares fit log(u + v) ~ log C2 - C3 r on the decay window.
struct LimitDecayFit {
  double C2 = 0.0;
  double C3 = 0.0;
  double r_squared = 0.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double lift = 1.0;  // factor applied to the fitted C2 to clear the 5% slack
  std::size_t window_nodes = 0;
  std::size_t violations = 0;
};

struct GroundState {
  FieldPair fields;
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double A = 0.0;
  double B = 0.0;
  LimitDecayFit decay_fit;
  double aP = 0.0;
  double bP = 0.0;
  CouplingParams params;
  bool vector = true;            // both components nonzero
  bool collapsed = false;        // one component fell below 1e-8 of the other
  double strict_margin = 0.0;    // min(semitrivial) - energy, vector solves only
  bool radially_monotone = true;
  double boundary_ratio = 0.0;   // max boundary value / max value
};

double quadratic_part(const LimitProblem& p, const FieldPair& w);
double quartic_part(const LimitProblem& p, const FieldPair& w);
/// t* = sqrt(A / B); throws a degenerate-candidate error when B = 0.
double fiber_scale(const LimitProblem& p, const FieldPair& w);
/// E(w) = A^2 / (4 B); scale invariant.
double nehari_energy(const LimitProblem& p, const FieldPair& w);
/// Max norm of the discrete Euler-Lagrange defect at w (pinned nodes excluded).
double limit_residual(const LimitProblem& p, const FieldPair& w);

/// Gaussians exp(-r^2/2) of amplitude sqrt(max{aP, bP} / beta) in both
/// components; a scalar start keeps v = 0.
FieldPair default_initial_guess(const LimitProblem& p, bool scalar = false);

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 5000;
};

/// Minimises the Nehari quotient. A start with v = 0 (or u = 0) performs the
/// semitrivial scalar solve and skips the beta > beta0 requirement.
GroundState minimize_nehari(const LimitProblem& p, const FieldPair& init, const SolveOptions& options = {});
/// minimize_nehari from default_initial_guess.
GroundState solve_limit(const LimitProblem& p, bool scalar = false, const SolveOptions& options = {});

struct OracleResult {
  ScalarField profile;
  double energy = 0.0;
  double w0 = 0.0;      // central value of the separatrix
  double r_cut = 0.0;   // radius where the bracketing trajectories part
};

/// Shooting oracle for -Lap w + a w = mu w^3 (radial): bisection on w(0) in
/// [1e-3, 1e3] for the decaying separatrix, RK4 in r, energy
/// (1/4) int |w'|^2 + a w^2 by Simpson on the trajectory.
OracleResult scalar_oracle(double coeff_a, double mu, const GridPtr& grid);
/// Same oracle without the grid projection.
double scalar_oracle_energy(double coeff_a, double mu);
/// E1 = energy of the unit problem (a = mu = 1); computed once per process.
double unit_energy();

/// (sqrt(aP)/mu1 E1, sqrt(bP)/mu2 E1).
std::pair<double, double> semitrivial_energies(const LimitProblem& p);
std::pair<double, double> semitrivial_energies(const LimitProblem& p, double E1);

/// Decay fit of u + v over the window where values lie in
/// [1e-10 max, 1e-2 max] beyond the half-maximum radius.
LimitDecayFit decay_fit_limit(const GroundState& gs);

}  // namespace cnls
