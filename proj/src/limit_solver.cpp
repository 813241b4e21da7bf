#include "cnls/limit_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cnls/descent.hpp"
#include "cnls/error.hpp"
#include "cnls/linalg.hpp"

namespace cnls {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

void check_pair(const LimitProblem& p, const FieldPair& w) {
  if (w.grid() != p.grid) fail(ErrorKind::configuration, "fields do not live on the problem grid");
}

class LimitObjective final : public FiberObjective {
 public:
  explicit LimitObjective(const LimitProblem& p)
      : p_(p), pre_u_(p.grid, p.aP), pre_v_(p.grid, p.bP), lap_(node_count(*p.grid)) {
    const std::size_t n = node_count(*p.grid);
    pinned_.resize(n);
    for (std::size_t i = 0; i < n; ++i) pinned_[i] = is_pinned_node(*p.grid, i) ? 1 : 0;
  }

  const GridPtr& grid() const override { return p_.grid; }

  FiberValue fiber(const FieldPair& w) const override {
    const double A = quadratic_part(p_, w);
    const double B = quartic_part(p_, w);
    if (!(B > 0.0)) fail(ErrorKind::degenerate_candidate, "quartic part vanishes");
    return {std::sqrt(A / B), A * A / (4.0 * B)};
  }

  double residual(const FieldPair& z, FieldPair& r) const override {
    const auto& prm = p_.params;
    double worst = 0.0;
    apply_laplacian(*p_.grid, z.u.values, lap_);
    for (std::size_t i = 0; i < lap_.size(); ++i) {
      const double u = z.u[i], v = z.v[i];
      r.u[i] = pinned_[i] ? 0.0 : -lap_[i] + p_.aP * u - (prm.mu1 * u * u * u + prm.beta * u * v * v);
      worst = std::max(worst, std::abs(r.u[i]));
    }
    apply_laplacian(*p_.grid, z.v.values, lap_);
    for (std::size_t i = 0; i < lap_.size(); ++i) {
      const double u = z.u[i], v = z.v[i];
      r.v[i] = pinned_[i] ? 0.0 : -lap_[i] + p_.bP * v - (prm.mu2 * v * v * v + prm.beta * u * u * v);
      worst = std::max(worst, std::abs(r.v[i]));
    }
    return worst;
  }

  void precondition(const FieldPair& r, FieldPair& out) const override {
    pre_u_.solve(r.u.values, out.u.values);
    pre_v_.solve(r.v.values, out.v.values);
  }

 private:
  const LimitProblem& p_;
  ShiftedLaplaceSolver pre_u_;
  ShiftedLaplaceSolver pre_v_;
  std::vector<char> pinned_;
  mutable std::vector<double> lap_;
};

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.values) m = std::max(m, std::abs(x));
  return m;
}

// ---- shooting oracle -------------------------------------------------------

struct Trajectory {
  std::vector<double> w;
  std::vector<double> dw;
  int outcome = 0;  // -1 undershoot (w' > 0), +1 overshoot (w < 0), 0 neither
};

struct Shooter {
  double a;
  double mu;
  double hs;
  double r_end;

  // y'' = -(2/r) y' + a y - mu y^3
  void rhs(double r, double w, double dw, double& fw, double& fdw) const {
    fw = dw;
    fdw = -2.0 / r * dw + a * w - mu * w * w * w;
  }

  Trajectory run(double w0, bool record) const {
    Trajectory t;
    const double c = a * w0 - mu * w0 * w0 * w0;
    double r = hs;
    double w = w0 + c * hs * hs / 6.0;
    double dw = c * hs / 3.0;
    if (record) {
      t.w = {w0, w};
      t.dw = {0.0, dw};
    }
    const auto steps = static_cast<std::size_t>(std::ceil(r_end / hs));
    for (std::size_t k = 1; k < steps; ++k) {
      double k1w, k1d, k2w, k2d, k3w, k3d, k4w, k4d;
      rhs(r, w, dw, k1w, k1d);
      rhs(r + 0.5 * hs, w + 0.5 * hs * k1w, dw + 0.5 * hs * k1d, k2w, k2d);
      rhs(r + 0.5 * hs, w + 0.5 * hs * k2w, dw + 0.5 * hs * k2d, k3w, k3d);
      rhs(r + hs, w + hs * k3w, dw + hs * k3d, k4w, k4d);
      w += hs / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
      dw += hs / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
      r += hs;
      if (record) {
        t.w.push_back(w);
        t.dw.push_back(dw);
      }
      if (w < 0.0) {
        t.outcome = 1;
        return t;
      }
      if (dw > 0.0) {
        t.outcome = -1;
        return t;
      }
    }
    return t;
  }

  int classify(double w0) const {
    const int o = run(w0, false).outcome;
    return o == 0 ? -1 : o;
  }
};

struct Separatrix {
  std::vector<double> w;   // samples at r_k = k hs, k = 0..K
  std::vector<double> dw;
  double hs = 0.0;
  double kappa = 0.0;      // sqrt(a), tail rate
  double tail_amp = 0.0;   // w ~ tail_amp exp(-kappa r) / r beyond r_cut
  double r_cut = 0.0;
  double w0 = 0.0;
  double energy = 0.0;

  double value(double r) const {
    if (r >= r_cut) return tail_amp * std::exp(-kappa * r) / r;
    const double s = r / hs;
    auto k = static_cast<std::size_t>(s);
    if (k + 1 >= w.size()) k = w.size() - 2;
    const double th = s - double(k);
    const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
    const double h10 = th * (1 - th) * (1 - th);
    const double h01 = th * th * (3 - 2 * th);
    const double h11 = th * th * (th - 1);
    return h00 * w[k] + h10 * hs * dw[k] + h01 * w[k + 1] + h11 * hs * dw[k + 1];
  }
};

Separatrix shoot_separatrix(double a, double mu) {
  if (!(a > 0.0) || !(mu > 0.0)) fail(ErrorKind::configuration, "oracle coefficients must be positive");
  const double kappa = std::sqrt(a);
  Shooter sh{a, mu, 1e-3 / kappa, 40.0 / kappa};

  // log-spaced scan of w(0) in [1e-3, 1e3] for the undershoot -> overshoot switch
  constexpr int scan = 240;
  double lo = 0.0, hi = 0.0;
  int prev = sh.classify(1e-3);
  double prev_w = 1e-3;
  bool found = false;
  for (int k = 1; k <= scan && !found; ++k) {
    const double w0 = std::pow(10.0, -3.0 + 6.0 * double(k) / scan);
    const int o = sh.classify(w0);
    if (prev == -1 && o == 1) {
      lo = prev_w;
      hi = w0;
      found = true;
    }
    prev = o;
    prev_w = w0;
  }
  if (!found) fail(ErrorKind::oracle_failure, fmt::format("no shooting bracket in [1e-3, 1e3] for a={}, mu={}", a, mu));
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    (sh.classify(mid) == 1 ? hi : lo) = mid;
  }

  const Trajectory under = sh.run(lo, true);
  const Trajectory over = sh.run(hi, true);
  const std::size_t K = std::min(under.w.size(), over.w.size());
  // cut where the bracketing trajectories part by 1e-3 of their mean
  std::size_t cut = K - 1;
  for (std::size_t k = 1; k < K; ++k) {
    const double m = 0.5 * (under.w[k] + over.w[k]);
    if (std::abs(under.w[k] - over.w[k]) > 1e-3 * std::abs(m) || m <= 0.0) {
      cut = k - 1;
      break;
    }
  }
  if (cut % 2 == 1) --cut;  // Simpson needs an even count
  if (cut < 100) fail(ErrorKind::oracle_failure, "shooting trajectories separated too early");

  Separatrix s;
  s.hs = sh.hs;
  s.kappa = kappa;
  s.w0 = 0.5 * (lo + hi);
  s.w.resize(cut + 1);
  s.dw.resize(cut + 1);
  for (std::size_t k = 0; k <= cut; ++k) {
    s.w[k] = 0.5 * (under.w[k] + over.w[k]);
    s.dw[k] = 0.5 * (under.dw[k] + over.dw[k]);
  }
  s.r_cut = double(cut) * s.hs;
  s.tail_amp = s.w[cut] * s.r_cut * std::exp(kappa * s.r_cut);

  // (1/4) 4 pi int (w'^2 + a w^2) r^2 dr, Simpson on the trajectory plus the
  // Yukawa tail integrated on its own grid
  auto integrand = [&](double r, double w, double dw) { return (dw * dw + a * w * w) * r * r; };
  double acc = 0.0;
  for (std::size_t k = 0; k + 2 <= cut; k += 2) {
    const double r0 = double(k) * s.hs;
    acc += s.hs / 3.0 *
           (integrand(r0, s.w[k], s.dw[k]) + 4.0 * integrand(r0 + s.hs, s.w[k + 1], s.dw[k + 1]) +
            integrand(r0 + 2.0 * s.hs, s.w[k + 2], s.dw[k + 2]));
  }
  const double ht = s.hs;
  const auto tail_steps = static_cast<std::size_t>(std::ceil(40.0 / kappa / ht / 2.0)) * 2;
  auto tail = [&](double r) {
    const double e = std::exp(-kappa * r);
    const double w = s.tail_amp * e / r;
    const double dw = -s.tail_amp * e * (kappa * r + 1.0) / (r * r);
    return integrand(r, w, dw);
  };
  for (std::size_t k = 0; k + 2 <= tail_steps; k += 2) {
    const double r0 = s.r_cut + double(k) * ht;
    acc += ht / 3.0 * (tail(r0) + 4.0 * tail(r0 + ht) + tail(r0 + 2.0 * ht));
  }
  s.energy = 0.25 * four_pi * acc;
  return s;
}

}  // namespace

double quadratic_part(const LimitProblem& p, const FieldPair& w) {
  check_pair(p, w);
  const auto weights = cell_weights(*p.grid);
  double mass_u = 0.0, mass_v = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    mass_u += weights[i] * w.u[i] * w.u[i];
    mass_v += weights[i] * w.v[i] * w.v[i];
  }
  return dirichlet_energy(*p.grid, w.u.values) + dirichlet_energy(*p.grid, w.v.values) + p.aP * mass_u +
         p.bP * mass_v;
}

double quartic_part(const LimitProblem& p, const FieldPair& w) {
  check_pair(p, w);
  const auto weights = cell_weights(*p.grid);
  const auto& prm = p.params;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double u2 = w.u[i] * w.u[i], v2 = w.v[i] * w.v[i];
    acc += weights[i] * (prm.mu1 * u2 * u2 + 2.0 * prm.beta * u2 * v2 + prm.mu2 * v2 * v2);
  }
  return acc;
}

double fiber_scale(const LimitProblem& p, const FieldPair& w) {
  const double B = quartic_part(p, w);
  if (!(B > 0.0)) fail(ErrorKind::degenerate_candidate, "fiber_scale: quartic part vanishes");
  return std::sqrt(quadratic_part(p, w) / B);
}

double nehari_energy(const LimitProblem& p, const FieldPair& w) {
  const double B = quartic_part(p, w);
  if (!(B > 0.0)) fail(ErrorKind::degenerate_candidate, "nehari_energy: quartic part vanishes");
  const double A = quadratic_part(p, w);
  return A * A / (4.0 * B);
}

double limit_residual(const LimitProblem& p, const FieldPair& w) {
  check_pair(p, w);
  LimitObjective obj(p);
  FieldPair r = zero_pair(p.grid);
  return obj.residual(w, r);
}

FieldPair default_initial_guess(const LimitProblem& p, bool scalar) {
  const std::size_t n = node_count(*p.grid);
  ScalarField u(p.grid), v(p.grid);
  const double amp = scalar ? std::sqrt(p.aP / p.params.mu1)
                            : std::sqrt(std::max(p.aP, p.bP) / std::max(p.params.beta, 1e-300));
  for (std::size_t i = 0; i < n; ++i) {
    const double r = node_radius(*p.grid, i);
    const double g = amp * std::exp(-0.5 * r * r);
    u[i] = g;
    v[i] = scalar ? 0.0 : g;
  }
  return {std::move(u), std::move(v)};
}

GroundState minimize_nehari(const LimitProblem& p, const FieldPair& init, const SolveOptions& options) {
  if (!(p.aP > 0.0) || !(p.bP > 0.0)) fail(ErrorKind::configuration, "limit problem needs aP, bP > 0");
  p.params.validate();
  check_pair(p, init);
  const bool has_u = max_abs(init.u) > 0.0;
  const bool has_v = max_abs(init.v) > 0.0;
  if (!has_u && !has_v) fail(ErrorKind::degenerate_candidate, "initial guess is zero");
  const bool vector = has_u && has_v;
  if (vector && p.beta0 && !(p.params.beta > *p.beta0)) {
    fail(ErrorKind::admissibility,
         fmt::format("beta = {:.6g} does not exceed beta0 = {:.6g}", p.params.beta, *p.beta0));
  }

  LimitObjective obj(p);
  DescentOptions dopt;
  dopt.tol = options.tol;
  dopt.max_iter = options.max_iter;
  DescentResult res = fiber_descent(obj, init, dopt);

  GroundState gs;
  gs.fields = std::move(res.z);
  gs.residual = res.residual;
  gs.iterations = res.iterations;
  gs.A = quadratic_part(p, gs.fields);
  gs.B = quartic_part(p, gs.fields);
  gs.energy = gs.A * gs.A / (4.0 * gs.B);
  gs.aP = p.aP;
  gs.bP = p.bP;
  gs.params = p.params;
  gs.vector = vector;

  const double mu = gs.fields.u.max(), mv = gs.fields.v.max();
  const double peak = std::max(mu, mv);
  if (vector) {
    gs.collapsed = std::min(mu, mv) < 1e-8 * peak;
    const auto [e1, e2] = semitrivial_energies(p);
    gs.strict_margin = std::min(e1, e2) - gs.energy;
    if (gs.collapsed) {
      spdlog::warn("semitrivial collapse at aP={:.6g}, bP={:.6g}, beta={:.6g}: strict inequality not observed", p.aP,
                   p.bP, p.params.beta);
    } else if (!(gs.strict_margin > 1e-9)) {
      spdlog::warn("vector energy {:.12g} does not undercut the semitrivial level {:.12g}", gs.energy,
                   std::min(e1, e2));
    }
  }

  if (is_radial(*p.grid)) {
    const std::size_t n = node_count(*p.grid);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (gs.fields.u[i + 1] > gs.fields.u[i] + 1e-8 || gs.fields.v[i + 1] > gs.fields.v[i] + 1e-8) {
        gs.radially_monotone = false;
        break;
      }
    }
    const std::size_t last = n >= 2 ? n - 2 : 0;
    gs.boundary_ratio = peak > 0.0 ? std::max(gs.fields.u[last], gs.fields.v[last]) / peak : 0.0;
  }
  try {
    gs.decay_fit = decay_fit_limit(gs);
  } catch (const Error& e) {
    spdlog::debug("decay fit skipped: {}", e.what());
  }
  return gs;
}

GroundState solve_limit(const LimitProblem& p, bool scalar, const SolveOptions& options) {
  return minimize_nehari(p, default_initial_guess(p, scalar), options);
}

OracleResult scalar_oracle(double coeff_a, double mu, const GridPtr& grid) {
  const Separatrix s = shoot_separatrix(coeff_a, mu);
  OracleResult out;
  out.energy = s.energy;
  out.w0 = s.w0;
  out.r_cut = s.r_cut;
  out.profile = ScalarField(grid);
  for (std::size_t i = 0; i < node_count(*grid); ++i) out.profile[i] = s.value(node_radius(*grid, i));
  return out;
}

double scalar_oracle_energy(double coeff_a, double mu) { return shoot_separatrix(coeff_a, mu).energy; }

double unit_energy() {
  static const double e1 = scalar_oracle_energy(1.0, 1.0);
  return e1;
}

std::pair<double, double> semitrivial_energies(const LimitProblem& p, double E1) {
  if (!(p.aP > 0.0) || !(p.bP > 0.0) || !(p.params.mu1 > 0.0) || !(p.params.mu2 > 0.0)) {
    fail(ErrorKind::configuration, "semitrivial energies need positive coefficients");
  }
  return {std::sqrt(p.aP) / p.params.mu1 * E1, std::sqrt(p.bP) / p.params.mu2 * E1};
}

std::pair<double, double> semitrivial_energies(const LimitProblem& p) { return semitrivial_energies(p, unit_energy()); }

LimitDecayFit decay_fit_limit(const GroundState& gs) {
  const auto& grid = gs.fields.grid();
  const std::size_t n = node_count(*grid);
  std::vector<std::pair<double, double>> samples;  // (r, u + v)
  samples.reserve(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_pinned_node(*grid, i)) continue;
    const double s = gs.fields.u[i] + gs.fields.v[i];
    samples.emplace_back(node_radius(*grid, i), s);
    peak = std::max(peak, s);
  }
  std::sort(samples.begin(), samples.end());
  double r_half = 0.0;
  for (const auto& [r, s] : samples) {
    if (s <= 0.5 * peak) {
      r_half = r;
      break;
    }
  }
  std::vector<double> xs, ys;
  for (const auto& [r, s] : samples) {
    if (r >= r_half && s >= 1e-10 * peak && s <= 1e-2 * peak) {
      xs.push_back(r);
      ys.push_back(std::log(s));
    }
  }
  if (xs.size() < 3) fail(ErrorKind::configuration, "decay window is empty; enlarge the domain");
  const double m = double(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sx += xs[k];
    sy += ys[k];
    sxx += xs[k] * xs[k];
    sxy += xs[k] * ys[k];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / m;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / m;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double e = ys[k] - (icpt + slope * xs[k]);
    ss_res += e * e;
    ss_tot += (ys[k] - ybar) * (ys[k] - ybar);
  }
  LimitDecayFit fit;
  fit.C3 = -slope;
  fit.C2 = std::exp(icpt);
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.r_lo = xs.front();
  fit.r_hi = xs.back();
  fit.window_nodes = xs.size();
  double worst = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    worst = std::max(worst, std::exp(ys[k]) / (fit.C2 * std::exp(-fit.C3 * xs[k])));
  }
  fit.lift = std::max(1.0, worst / 1.05);
  fit.C2 *= fit.lift;
  fit.violations = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (std::exp(ys[k]) > 1.05 * fit.C2 * std::exp(-fit.C3 * xs[k])) ++fit.violations;
  }
  return fit;
}

}  // namespace cnls
