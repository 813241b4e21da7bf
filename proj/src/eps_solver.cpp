#include "cnls/eps_solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cnls/descent.hpp"
#include "cnls/error.hpp"
#include "cnls/linalg.hpp"

namespace cnls {

namespace {

struct OutsideItem {
  double tau;   // t^2 at which the node switches to the truncated branch
  double wf;    // w_i F_i
};

// Exact maximiser t^2 of t -> J_eps(t w) given Q and the per-node F values.
double fiber_tau(const EpsProblem& p, const FieldPair& w, double Q, std::vector<double>& F_buf,
                 std::vector<OutsideItem>& items) {
  const auto& weights = p.weights();
  const auto& inside = p.inside();
  const auto& gamma = p.gamma();
  const std::size_t n = weights.size();
  F_buf.resize(n);
  items.clear();
  double s_in = 0.0;
  double s_out = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = F(std::max(w.u[i], 0.0), std::max(w.v[i], 0.0), p.params());
    F_buf[i] = f;
    if (f <= 0.0) continue;
    const double wf = weights[i] * f;
    if (inside[i]) {
      s_in += wf;
    } else {
      items.push_back({gamma[i] / (2.0 * std::sqrt(f)), wf});
      s_out += wf;
    }
  }
  if (!(s_in > 0.0)) fail(ErrorKind::candidate, "candidate has no mass in O_eps");
  if (!(Q > 0.0)) fail(ErrorKind::degenerate_candidate, "quadratic part vanishes");
  std::sort(items.begin(), items.end(), [](const OutsideItem& l, const OutsideItem& r) { return l.tau < r.tau; });
  // (1/t) dJ/dt = Q - 4 tau S_quart(tau) - S_sat(tau), piecewise linear in tau
  double s_quart = s_in + s_out;
  double s_sat = 0.0;
  for (const auto& it : items) {
    const double root = (Q - s_sat) / (4.0 * s_quart);
    if (root <= it.tau) return root;
    s_quart -= it.wf;
    s_sat += 4.0 * it.tau * it.wf;
  }
  return (Q - s_sat) / (4.0 * s_in);
}

double J_scaled(const EpsProblem& p, double tau, double Q, const std::vector<double>& F_buf) {
  const auto& weights = p.weights();
  const auto& inside = p.inside();
  const auto& gamma = p.gamma();
  const double t4 = tau * tau;
  double g = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double f = F_buf[i];
    if (f <= 0.0) continue;
    const double ft = t4 * f;
    if (inside[i] || 4.0 * ft <= gamma[i] * gamma[i]) {
      g += weights[i] * ft;
    } else {
      g += weights[i] * (gamma[i] * tau * std::sqrt(f) - 0.25 * gamma[i] * gamma[i]);
    }
  }
  return 0.5 * tau * Q - g;
}

double min_over_inside(const std::vector<double>& values, const std::vector<char>& inside) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (inside[i]) m = std::min(m, values[i]);
  }
  return m;
}

ShiftedLaplaceSolver make_preconditioner(const EpsProblem& p, const std::vector<double>& shift) {
  if (is_radial(*p.grid())) return ShiftedLaplaceSolver(p.grid(), shift);
  return ShiftedLaplaceSolver(p.grid(), std::max(min_over_inside(shift, p.inside()), 0.0));
}

class EpsObjective final : public FiberObjective {
 public:
  explicit EpsObjective(const EpsProblem& p)
      : p_(p), pre_u_(make_preconditioner(p, p.a_eps())), pre_v_(make_preconditioner(p, p.b_eps())) {
    const std::size_t n = node_count(*p.grid());
    pinned_.resize(n);
    lap_.resize(n);
    for (std::size_t i = 0; i < n; ++i) pinned_[i] = is_pinned_node(*p.grid(), i) ? 1 : 0;
  }

  const GridPtr& grid() const override { return p_.grid(); }

  FiberValue fiber(const FieldPair& w) const override {
    const double Q = eps_quadratic(p_, w);
    const double tau = fiber_tau(p_, w, Q, F_buf_, items_);
    return {std::sqrt(tau), J_scaled(p_, tau, Q, F_buf_)};
  }

  double residual(const FieldPair& z, FieldPair& r) const override { return defect(z, r, true); }

  double defect(const FieldPair& z, FieldPair& r, bool truncated) const {
    const auto& inside = p_.inside();
    const auto& gamma = p_.gamma();
    const auto& a = p_.a_eps();
    const auto& b = p_.b_eps();
    const auto& prm = p_.params();
    const std::size_t n = lap_.size();
    apply_laplacian(*p_.grid(), z.u.values, lap_);
    for (std::size_t i = 0; i < n; ++i) r.u[i] = -lap_[i] + a[i] * z.u[i];
    apply_laplacian(*p_.grid(), z.v.values, lap_);
    for (std::size_t i = 0; i < n; ++i) r.v[i] = -lap_[i] + b[i] * z.v[i];
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pinned_[i]) {
        r.u[i] = r.v[i] = 0.0;
        continue;
      }
      const double s = std::max(z.u[i], 0.0), t = std::max(z.v[i], 0.0);
      const auto g = truncated ? grad_G_local(inside[i] != 0, gamma[i], s, t, prm) : grad_F(s, t, prm);
      r.u[i] -= g[0];
      r.v[i] -= g[1];
      worst = std::max({worst, std::abs(r.u[i]), std::abs(r.v[i])});
    }
    return worst;
  }

  void precondition(const FieldPair& r, FieldPair& out) const override {
    pre_u_.solve(r.u.values, out.u.values);
    pre_v_.solve(r.v.values, out.v.values);
  }

 private:
  const EpsProblem& p_;
  ShiftedLaplaceSolver pre_u_;
  ShiftedLaplaceSolver pre_v_;
  std::vector<char> pinned_;
  mutable std::vector<double> lap_;
  mutable std::vector<double> F_buf_;
  mutable std::vector<OutsideItem> items_;
};

double hardy_penalty_ratio(const EpsProblem& p, const FieldPair& w) {
  const auto& weights = p.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (p.inside()[i]) continue;
    acc += weights[i] * p.gamma()[i] * (w.u[i] * w.u[i] + w.v[i] * w.v[i]);
  }
  const double norm = eps_quadratic(p, w);
  return norm > 0.0 ? std::sqrt(p.params().beta) * acc / norm : 0.0;
}

/// Node maximising u + v, ties to the smallest |x|.
Vec3 argmax_sum(const FieldPair& f) {
  const Grid& g = *f.grid();
  double best = -std::numeric_limits<double>::infinity();
  double best_r = 0.0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < node_count(g); ++i) {
    const double s = f.u[i] + f.v[i];
    const double r = node_radius(g, i);
    if (s > best || (s == best && r < best_r)) {
      best = s;
      best_r = r;
      best_i = i;
    }
  }
  return node_point(g, best_i);
}

double sup_norm(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.values) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

EpsProblem::EpsProblem(const PotentialSpec& pots, const DomainSpec& domain, const CouplingParams& params, double eps,
                       GridPtr grid)
    : pots_(pots), params_(params), grid_(std::move(grid)) {
  params_.validate();
  trunc_.eps = eps;
  trunc_.domain = domain;
  if (!(eps > 0.0) || !(eps < domain.rho0)) {
    fail(ErrorKind::configuration, fmt::format("eps = {:.6g} must lie in (0, rho0 = {:.6g})", eps, domain.rho0));
  }
  if (!(domain.rho0 / eps > 1.0)) fail(ErrorKind::configuration, "gamma_eps needs rho0 / eps > 1");
  const std::size_t n = node_count(*grid_);
  a_.resize(n);
  b_.resize(n);
  gamma_.assign(n, 0.0);
  inside_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 x = node_point(*grid_, i);
    const auto [a, b] = pots_(eps * x);
    a_[i] = a;
    b_[i] = b;
    inside_[i] = trunc_.in_O_eps(x) ? 1 : 0;
    if (!inside_[i]) gamma_[i] = gamma_eps(x.norm(), trunc_);
  }
  w_ = cell_weights(*grid_);
  if (std::none_of(inside_.begin(), inside_.end(), [](char c) { return c != 0; })) {
    fail(ErrorKind::configuration, "no grid node lies in O_eps");
  }
}

double default_R2(const DomainSpec& domain, const TailRadius& tail) {
  return std::max(2.0 * domain.rho1, 1.25 * tail.R1);
}

GridPtr make_eps_grid(const PotentialSpec& pots, const DomainSpec& domain, double eps, double R2,
                      const EpsGridOptions& options) {
  const bool radial = pots.radial_about_origin() && domain.O.size() == 1 && domain.O.front().center == Vec3{};
  if (radial) {
    const double extent = 2.0 * R2 / eps;
    if (!(options.h > 0.0) || options.h > 0.05) fail(ErrorKind::configuration, "radial eps spacing must lie in (0, 0.05]");
    const double nodes = std::ceil(extent / options.h);
    if (nodes > double(options.max_nodes)) {
      fail(ErrorKind::configuration,
           fmt::format("eps = {:.4g} needs {:.0f} radial nodes (limit {}); use a larger eps", eps, nodes,
                       options.max_nodes));
    }
    return make_grid(RadialGrid::with_spacing(options.h, extent));
  }
  const double hw = options.cartesian_half_width > 0.0 ? options.cartesian_half_width
                                                       : (domain.rho1 + 5.0 * domain.delta) / eps;
  spdlog::warn("Cartesian eps grid {}^3 on half width {:.3g}: expect about three correct digits",
               options.cartesian_n, hw);
  return make_grid(CartesianGrid3(hw, options.cartesian_n));
}

double eps_quadratic(const EpsProblem& p, const FieldPair& w) {
  const auto& weights = p.weights();
  double acc = dirichlet_energy(*p.grid(), w.u.values) + dirichlet_energy(*p.grid(), w.v.values);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] * (p.a_eps()[i] * w.u[i] * w.u[i] + p.b_eps()[i] * w.v[i] * w.v[i]);
  }
  return acc;
}

double J_eps(const EpsProblem& p, const FieldPair& w) {
  const auto& weights = p.weights();
  double g = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    g += weights[i] * G_local(p.inside()[i] != 0, p.gamma()[i], std::max(w.u[i], 0.0), std::max(w.v[i], 0.0),
                              p.params());
  }
  return 0.5 * eps_quadratic(p, w) - g;
}

double fiber_max_t(const EpsProblem& p, const FieldPair& w) {
  std::vector<double> F_buf;
  std::vector<OutsideItem> items;
  return std::sqrt(fiber_tau(p, w, eps_quadratic(p, w), F_buf, items));
}

double eps_residual(const EpsProblem& p, const FieldPair& w) {
  EpsObjective obj(p);
  FieldPair r = zero_pair(p.grid());
  return obj.defect(w, r, true);
}

double eps_untruncated_residual(const EpsProblem& p, const FieldPair& w) {
  EpsObjective obj(p);
  FieldPair r = zero_pair(p.grid());
  return obj.defect(w, r, false);
}

FieldPair recentre(const FieldPair& f, const Vec3& x_eps) {
  const GridPtr& grid = f.grid();
  if (is_radial(*grid)) return f;
  const auto& g = std::get<CartesianGrid3>(*grid);
  const std::size_t n = g.n_per_axis();
  const double h = g.spacing();
  // shift that moves x_eps onto the node nearest the origin
  auto offset = [&](double c) {
    const auto src = static_cast<long>(std::floor((c + g.half_width()) / h));
    return src - static_cast<long>(n / 2);
  };
  const long di = offset(x_eps.x), dj = offset(x_eps.y), dk = offset(x_eps.z);
  FieldPair out = zero_pair(grid);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const long si = long(i) + di, sj = long(j) + dj, sk = long(k) + dk;
        if (si < 0 || sj < 0 || sk < 0 || si >= long(n) || sj >= long(n) || sk >= long(n)) continue;
        const std::size_t src = g.index(std::size_t(si), std::size_t(sj), std::size_t(sk));
        const std::size_t dst = g.index(i, j, k);
        out.u[dst] = f.u[src];
        out.v[dst] = f.v[src];
      }
    }
  }
  return out;
}

GroundState limit_state_on(const EpsProblem& p, const Vec3& P0, const SolveOptions& options) {
  if (is_radial(*p.grid()) && !(P0 == Vec3{})) {
    fail(ErrorKind::configuration, "radial eps grids need the concentration point at the origin");
  }
  LimitProblem lp;
  std::tie(lp.aP, lp.bP) = p.pots()(P0);
  lp.params = p.params();
  lp.grid = p.grid();
  FieldPair init = zero_pair(lp.grid);
  const double amp = std::sqrt(std::max(lp.aP, lp.bP) / lp.params.beta);
  const Vec3 c = (1.0 / p.eps()) * P0;
  for (std::size_t i = 0; i < node_count(*lp.grid); ++i) {
    const Vec3 x = node_point(*lp.grid, i) - c;
    const double r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    init.u[i] = init.v[i] = amp * std::exp(-0.5 * r2);
  }
  return minimize_nehari(lp, init, options);
}

EpsSolution solve_eps(const EpsProblem& p, const FieldPair& init, const EpsSolveOptions& options) {
  const double e1 = eps1(p.params(), p.domain().rho0);
  if (!(p.eps() < e1)) {
    fail(ErrorKind::configuration, fmt::format("eps = {:.6g} must be below eps1 = {:.6g}", p.eps(), e1));
  }
  EpsObjective obj(p);
  DescentOptions dopt;
  dopt.tol = options.tol;
  dopt.max_iter = options.max_iter;
  double worst_hardy = 0.0;
  if (options.hardy_check_every > 0) {
    dopt.observer = [&](int it, double, double, const FieldPair& z) {
      if (it % options.hardy_check_every != 0) return;
      worst_hardy = std::max(worst_hardy, hardy_penalty_ratio(p, z));
    };
  }
  DescentResult res = fiber_descent(obj, init, dopt);
  EpsSolution sol = describe_solution(p, std::move(res.z));
  sol.level = res.value;
  sol.residual = res.residual;
  sol.iterations = res.iterations;
  sol.hardy_penalty_ratio = std::max(worst_hardy, sol.hardy_penalty_ratio);
  if (sol.hardy_penalty_ratio > 0.5) {
    spdlog::warn("penalised-region Hardy ratio {:.3g} exceeds 1/2 at eps = {:.4g}", sol.hardy_penalty_ratio,
                 p.eps());
  }
  if (!sol.both_positive_at_max) {
    spdlog::warn("eps = {:.4g}: one component is below 1e-8 of the maximum at x_eps", p.eps());
  }
  return sol;
}

EpsSolution describe_solution(const EpsProblem& p, FieldPair fields) {
  EpsSolution sol;
  sol.eps = p.eps();
  sol.fields = std::move(fields);
  sol.level = J_eps(p, sol.fields);
  sol.residual = eps_residual(p, sol.fields);
  sol.untruncated_residual = eps_untruncated_residual(p, sol.fields);
  sol.fiber_t = fiber_max_t(p, sol.fields);
  sol.hardy_penalty_ratio = hardy_penalty_ratio(p, sol.fields);

  const GridPtr& grid = p.grid();
  const std::size_t n = node_count(*grid);
  double best = -1.0;
  double best_r = 0.0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!p.inside()[i]) continue;
    const double s = sol.fields.u[i] + sol.fields.v[i];
    const double r = node_radius(*grid, i);
    if (s > best || (s == best && r < best_r)) {
      best = s;
      best_r = r;
      best_i = i;
    }
  }
  sol.x_eps = node_point(*grid, best_i);
  sol.peak_value = best;
  const double peak = std::max(sup_norm(sol.fields.u), sup_norm(sol.fields.v));
  sol.both_positive_at_max = sol.fields.u[best_i] >= 1e-8 * peak && sol.fields.v[best_i] >= 1e-8 * peak;
  sol.rescaled_profiles = recentre(sol.fields, sol.x_eps);
  if (is_radial(*grid) && n >= 2) {
    sol.boundary_ratio = peak > 0.0 ? std::max(sol.fields.u[n - 2], sol.fields.v[n - 2]) / peak : 0.0;
  }
  std::size_t active = 0, outside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.inside()[i]) continue;
    ++outside;
    const double g = p.gamma()[i];
    if (4.0 * F(sol.fields.u[i], sol.fields.v[i], p.params()) >= g * g) ++active;
  }
  sol.truncation_active_fraction = outside ? double(active) / double(outside) : 0.0;
  return sol;
}

TruncationReport truncation_report(const EpsProblem& p, const EpsSolution& sol, double tol) {
  TruncationReport rep;
  const std::size_t n = node_count(*p.grid());
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.inside()[i]) continue;
    ++rep.outside_nodes;
    const double g = p.gamma()[i];
    const double ratio = F(sol.fields.u[i], sol.fields.v[i], p.params()) / (0.25 * g * g);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio >= 1.0) ++active;
  }
  rep.active_fraction = rep.outside_nodes ? double(active) / double(rep.outside_nodes) : 0.0;
  rep.untruncated_residual = eps_untruncated_residual(p, sol.fields);
  rep.original_equation_solved = active == 0 && rep.untruncated_residual <= tol;
  return rep;
}

ConcentrationSeries concentration_series(const PotentialSpec& pots, const DomainSpec& domain,
                                         const CouplingParams& params, const LandscapeMap& landscape,
                                         const ConcentrationOptions& options) {
  ConcentrationSeries series;
  series.eps1 = eps1(params, domain.rho0);
  const auto& ladder = options.eps_ladder;
  if (ladder.empty()) fail(ErrorKind::configuration, "eps ladder is empty");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0) || !(ladder[k] < series.eps1)) {
      fail(ErrorKind::configuration,
           fmt::format("eps = {:.6g} lies outside (0, eps1 = {:.6g})", ladder[k], series.eps1));
    }
    if (k > 0 && !(ladder[k] < ladder[k - 1])) fail(ErrorKind::configuration, "eps ladder must decrease strictly");
  }
  if (landscape.M_set.empty()) fail(ErrorKind::configuration, "landscape has no minimiser");
  series.R2 = options.R2 > 0.0 ? options.R2 : default_R2(domain, tail_radius(pots, domain));
  // minimiser nearest the origin seeds every solve
  series.P0 = *std::min_element(landscape.M_set.begin(), landscape.M_set.end(),
                                [](const Vec3& l, const Vec3& r) { return l.norm() < r.norm(); });
  const Admissibility adm = sample_admissibility(pots, domain, domain.rho0 / 16.0);
  const double peak_bound = std::sqrt(std::min(adm.a0, adm.b0) / params.beta);

  series.rows.resize(ladder.size());
  series.solutions.resize(ladder.size());
  series.problems.resize(ladder.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t k = next++; k < ladder.size(); k = next++) {
      ConcentrationRow& row = series.rows[k];
      row.eps = ladder[k];
      row.peak_bound = peak_bound;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        auto grid = make_eps_grid(pots, domain, row.eps, series.R2, options.grid);
        auto problem = std::make_shared<EpsProblem>(pots, domain, params, row.eps, grid);
        auto limit = std::make_shared<GroundState>(limit_state_on(*problem, series.P0, options.limit_solve));
        auto sol = std::make_shared<EpsSolution>(solve_eps(*problem, limit->fields, options.solve));
        row.level = sol->level;
        row.x_tilde = row.eps * sol->x_eps;
        row.dist_to_M = std::numeric_limits<double>::infinity();
        Vec3 nearest = series.P0;
        for (const auto& M : landscape.M_set) {
          const double d = distance(row.x_tilde, M);
          if (d < row.dist_to_M) {
            row.dist_to_M = d;
            nearest = M;
          }
        }
        if (!(nearest == series.P0) && !is_radial(*grid)) {
          limit = std::make_shared<GroundState>(limit_state_on(*problem, nearest, options.limit_solve));
        }
        const FieldPair ref = recentre(limit->fields, argmax_sum(limit->fields));
        double err = 0.0;
        for (std::size_t i = 0; i < node_count(*grid); ++i) {
          err = std::max({err, std::abs(sol->rescaled_profiles.u[i] - ref.u[i]),
                          std::abs(sol->rescaled_profiles.v[i] - ref.v[i])});
        }
        row.profile_error = err / std::max(sup_norm(ref.u), sup_norm(ref.v));
        sol->comparison_state = limit;
        row.level_gap = std::abs(sol->level - landscape.m0) / landscape.m0;
        row.grid_limit_level = limit->energy;
        row.peak_value = sol->peak_value;
        if (row.peak_value < row.peak_bound) {
          spdlog::warn("eps = {:.4g}: max of u + v over O_eps is {:.4g}, below the lower bound {:.4g}", row.eps,
                       row.peak_value, row.peak_bound);
        }
        row.truncation_fraction = sol->truncation_active_fraction;
        row.residual = sol->residual;
        row.untruncated_residual = sol->untruncated_residual;
        row.iterations = sol->iterations;
        series.solutions[k] = sol;
        series.problems[k] = problem;
      } catch (const Error& e) {
        row.failed = true;
        row.error = e.what();
        spdlog::error("eps = {:.4g} failed: {}", row.eps, e.what());
      }
      row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      spdlog::info("eps = {:.4g}: level {:.10g}, dist {:.3g}, profile error {:.3g}, {} iterations, {:.2f} s",
                   row.eps, row.level, row.dist_to_M, row.profile_error, row.iterations, row.runtime_s);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, ladder.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return series;
}

}  // namespace cnls
