#pragma once

#include <string>
#include <vector>

#include "cnls/eps_solver.hpp"
#include "cnls/grid.hpp"

namespace cnls {

/// int |grad f|^2 - 1/4 int f^2 / |x|^2; nonnegative up to quadrature slack
/// for every f vanishing on the outer boundary.
double hardy_margin(const ScalarField& f);
/// hardy_margin(f) >= -1e-8 int |grad f|^2.
bool hardy_holds(const ScalarField& f);

enum class DecayTier { inner_exp, band_exp, tail_log, envelope };
std::string to_string(DecayTier tier);

/// Fitted constants of one decay tier. Envelopes are checked with a 5%
/// multiplicative slack on every node of the tier region; the inner and
/// envelope tiers skip nodes at or below the 1e-12 floating-point floor.
struct DecayFit {
  DecayTier tier = DecayTier::inner_exp;
  double c = 0.0;
  double C = 0.0;
  double alpha = 0.0;         // tail and envelope tiers
  double window_lo = 0.0;     // fit window in the tier's distance variable
  double window_hi = 0.0;
  std::size_t window_nodes = 0;
  std::size_t checked_nodes = 0;
  double r_squared = 0.0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;   // max of value / envelope over the checked nodes
  bool asserted = true;       // false for a single-eps band record
  bool passed = false;
};

constexpr double decay_slack = 1.05;
constexpr double decay_floor = 1e-12;

/// omega <= C exp(-c dist(x, boundary of O_eps^{3 delta} or x_eps)) on
/// O_eps^{3 delta}. c comes from a least-squares fit where the distance is
/// attained at x_eps; C is the smallest constant covering that window.
DecayFit decay_inner(const EpsProblem& p, const EpsSolution& sol);

/// Max of omega over delta/eps <= |x - x_eps| <= 2 R2 / eps (stored in C, not
/// asserted). Throws a domain error when the grid does not reach the band.
DecayFit decay_band(const EpsProblem& p, const EpsSolution& sol, double R2);

/// Fit of log(band max) against -c / eps + log C across an eps ladder.
struct BandLadderFit {
  std::vector<double> eps;
  std::vector<double> band_max;
  double c = 0.0;
  double C = 0.0;   // lifted so every ladder entry satisfies the bound
  double r_squared = 0.0;
  bool strictly_decreasing = false;
  bool passed = false;   // c > 0, R^2 >= 0.9 and strictly decreasing
};
BandLadderFit fit_band_ladder(const std::vector<double>& eps, const std::vector<double>& band_max);

/// omega |x| (log|x|)^alpha <= C e^{-c/eps} for |x| > R2 / eps with (c, C)
/// taken from the band fit. Throws a domain error when the grid stops short.
DecayFit decay_tail(const EpsProblem& p, const EpsSolution& sol, double R2, double alpha, const BandLadderFit& band);

/// Rescaled envelope for u~ + v~ at s = |y - x~|:
/// C exp(-(c/eps) s/(1+s)) (1+s)^{-1} log(2+s)^{-alpha}. c is fitted on
/// s <= delta and C covers that window; all nodes are then checked.
DecayFit rescaled_envelope(const EpsProblem& p, const EpsSolution& sol, double alpha);
double envelope_value(double s, double eps, double c, double C, double alpha);

/// True iff no node outside O_eps reaches the truncation and the untruncated
/// residual is at most tol.
bool truncation_consistency(const EpsProblem& p, const EpsSolution& sol, double tol);

struct DecayProfileRow {
  double distance = 0.0;  // s = eps |x - x_eps|
  double omega = 0.0;
  double envelope = 0.0;
};
/// Nodes along the positive x axis through x_eps, with the envelope of fit.
std::vector<DecayProfileRow> decay_profile(const EpsProblem& p, const EpsSolution& sol, const DecayFit& fit);

}  // namespace cnls
