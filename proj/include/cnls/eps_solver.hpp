#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cnls/grid.hpp"
#include "cnls/landscape.hpp"
#include "cnls/limit_solver.hpp"
#include "cnls/model.hpp"

namespace cnls {

/// Rescaled problem -Lap u + a(eps x) u = mu1 u^3 + beta u v^2 (and v) with the
/// nonlinearity truncated outside O_eps. Per-node data are precomputed.
class EpsProblem {
 public:
  EpsProblem(const PotentialSpec& pots, const DomainSpec& domain, const CouplingParams& params, double eps,
             GridPtr grid);

  const TruncationParams& trunc() const { return trunc_; }
  double eps() const { return trunc_.eps; }
  const DomainSpec& domain() const { return trunc_.domain; }
  const PotentialSpec& pots() const { return pots_; }
  const CouplingParams& params() const { return params_; }
  const GridPtr& grid() const { return grid_; }

  const std::vector<double>& a_eps() const { return a_; }
  const std::vector<double>& b_eps() const { return b_; }
  /// Node lies in O_eps.
  const std::vector<char>& inside() const { return inside_; }
  /// gamma_eps(|x|) on nodes outside O_eps (0 inside).
  const std::vector<double>& gamma() const { return gamma_; }
  const std::vector<double>& weights() const { return w_; }

 private:
  PotentialSpec pots_;
  CouplingParams params_;
  TruncationParams trunc_;
  GridPtr grid_;
  std::vector<double> a_, b_, gamma_, w_;
  std::vector<char> inside_;
};

struct EpsGridOptions {
  double h = 0.02;                     // radial spacing
  std::size_t max_nodes = 1u << 22;    // memory guard
  std::size_t cartesian_n = 96;
  double cartesian_half_width = 0.0;   // 0 selects (rho1 + 5 delta) / eps
};

/// Radius R2 > R1 used for the grid extent and the decay bands.
double default_R2(const DomainSpec& domain, const TailRadius& tail);

/// Radial grid on B(0, 2 R2 / eps) when the potentials are radial about the
/// origin and O is an origin-centred ball; Cartesian box otherwise.
GridPtr make_eps_grid(const PotentialSpec& pots, const DomainSpec& domain, double eps, double R2,
                      const EpsGridOptions& options);

/// J_eps(w) = 1/2 |u|^2_{a,eps} + 1/2 |v|^2_{b,eps} - int G_eps(x, u+, v+).
double J_eps(const EpsProblem& p, const FieldPair& w);
/// Quadratic part |u|^2_{a,eps} + |v|^2_{b,eps}.
double eps_quadratic(const EpsProblem& p, const FieldPair& w);
/// Unique maximiser of t -> J_eps(t w); exact on the piecewise linear
/// representation of (1/t) dJ/dt in t^2. Throws a candidate error when w has
/// no mass in O_eps.
double fiber_max_t(const EpsProblem& p, const FieldPair& w);

/// Max norms of the defect of the truncated system and of the untruncated one.
double eps_residual(const EpsProblem& p, const FieldPair& w);
double eps_untruncated_residual(const EpsProblem& p, const FieldPair& w);

struct EpsSolution {
  FieldPair fields;
  double level = 0.0;
  Vec3 x_eps;
  double peak_value = 0.0;
  double truncation_active_fraction = 0.0;
  FieldPair rescaled_profiles;
  std::shared_ptr<const GroundState> comparison_state;
  double residual = 0.0;
  double untruncated_residual = 0.0;
  int iterations = 0;
  double eps = 0.0;
  double fiber_t = 1.0;               // fiber_max_t at the solution
  bool both_positive_at_max = true;   // u, v >= 1e-8 max at x_eps
  double hardy_penalty_ratio = 0.0;   // sqrt(beta) int_out gamma (u^2+v^2) / |(u,v)|^2
  double boundary_ratio = 0.0;
};

struct EpsSolveOptions {
  double tol = 1e-8;
  int max_iter = 5000;
  int hardy_check_every = 50;
};

/// Minimises w -> J_eps(t*(w) w) over nonnegative pairs with mass in O_eps.
EpsSolution solve_eps(const EpsProblem& p, const FieldPair& init, const EpsSolveOptions& options = {});

/// Diagnostics of a converged pair (level, x_eps, residuals, rescaled
/// profiles); used by solve_eps and when reloading stored fields.
EpsSolution describe_solution(const EpsProblem& p, FieldPair fields);

struct TruncationReport {
  double active_fraction = 0.0;  // share of nodes outside O_eps with F >= gamma^2/4
  double max_ratio = 0.0;        // max of F / (gamma^2/4) outside O_eps
  std::size_t outside_nodes = 0;
  bool original_equation_solved = false;
  double untruncated_residual = 0.0;
};
TruncationReport truncation_report(const EpsProblem& p, const EpsSolution& sol, double tol);

/// Limit ground state at P0 on the grid of p, translated to P0 / eps.
GroundState limit_state_on(const EpsProblem& p, const Vec3& P0, const SolveOptions& options);
/// (w1, w2)(y) = (u, v)(x_eps + y) sampled on the nodes of the same grid.
FieldPair recentre(const FieldPair& f, const Vec3& x_eps);

struct ConcentrationRow {
  double eps = 0.0;
  bool failed = false;
  std::string error;
  double level = 0.0;
  Vec3 x_tilde;
  double dist_to_M = 0.0;
  double level_gap = 0.0;      // |c_eps - m0| / m0
  double grid_limit_level = 0.0;  // limit ground state energy on the same grid
  double profile_error = 0.0;  // max norm, relative to the limit profile
  double peak_value = 0.0;
  double peak_bound = 0.0;
  double truncation_fraction = 0.0;
  double residual = 0.0;
  double untruncated_residual = 0.0;
  int iterations = 0;
  double runtime_s = 0.0;
};

struct ConcentrationOptions {
  std::vector<double> eps_ladder;
  EpsGridOptions grid;
  EpsSolveOptions solve;
  SolveOptions limit_solve;
  std::size_t workers = 1;
  double R2 = 0.0;  // 0 selects default_R2
};

struct ConcentrationSeries {
  std::vector<ConcentrationRow> rows;            // sorted by decreasing eps
  std::vector<std::shared_ptr<EpsSolution>> solutions;
  std::vector<std::shared_ptr<EpsProblem>> problems;
  double R2 = 0.0;
  double eps1 = 0.0;
  Vec3 P0;
};

ConcentrationSeries concentration_series(const PotentialSpec& pots, const DomainSpec& domain,
                                         const CouplingParams& params, const LandscapeMap& landscape,
                                         const ConcentrationOptions& options);

}  // namespace cnls
