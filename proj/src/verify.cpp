#include "cnls/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cnls/error.hpp"

namespace cnls {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

double omega_at(const EpsSolution& sol, std::size_t i) { return sol.fields.u[i] + sol.fields.v[i]; }

/// Distance from x to the boundary of O_eps^{3 delta}, measured from inside;
/// exact for one ball and a lower bound for unions.
double tube_boundary_distance(const EpsProblem& p, const Vec3& x) {
  const auto& d = p.domain();
  const double eps = p.eps();
  double best = 0.0;
  for (const auto& ball : d.O) {
    const double reach = (ball.radius + 3.0 * d.delta) / eps - distance(x, (1.0 / eps) * ball.center);
    best = std::max(best, reach);
  }
  return best;
}

double grid_reach(const EpsProblem& p, const Vec3& from) {
  const Grid& g = *p.grid();
  if (is_radial(g)) return std::get<RadialGrid>(g).r_max() - from.norm();
  const auto& c = std::get<CartesianGrid3>(g);
  const double hw = c.half_width();
  return std::min({hw - std::abs(from.x), hw - std::abs(from.y), hw - std::abs(from.z)});
}

void finish(DecayFit& fit) { fit.passed = fit.window_nodes > 0 && fit.violations == 0 && fit.c > 0.0; }

}  // namespace

double hardy_margin(const ScalarField& f) {
  const std::size_t n = f.size();
  ScalarField q(f.grid);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = node_radius(*f.grid, i);
    q[i] = f[i] * f[i] / (r * r);
  }
  return grad_norm_sq(f) - 0.25 * integrate(q);
}

bool hardy_holds(const ScalarField& f) { return hardy_margin(f) >= -1e-8 * grad_norm_sq(f); }

std::string to_string(DecayTier tier) {
  switch (tier) {
    case DecayTier::inner_exp: return "inner_exp";
    case DecayTier::band_exp: return "band_exp";
    case DecayTier::tail_log: return "tail_log";
    case DecayTier::envelope: return "envelope";
  }
  return "unknown";
}

DecayFit decay_inner(const EpsProblem& p, const EpsSolution& sol) {
  DecayFit fit;
  fit.tier = DecayTier::inner_exp;
  const std::size_t n = node_count(*p.grid());
  const double tube = 3.0 * p.domain().delta;
  std::vector<double> dist(n, -1.0);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 x = node_point(*p.grid(), i);
    if (!p.domain().in_tube(p.eps() * x, tube)) continue;
    const double to_peak = distance(x, sol.x_eps);
    const double to_edge = tube_boundary_distance(p, x);
    dist[i] = std::min(to_peak, to_edge);
    const double w = omega_at(sol, i);
    if (to_peak <= to_edge && w > decay_floor) {
      xs.push_back(dist[i]);
      ys.push_back(std::log(w));
    }
  }
  fit.window_nodes = xs.size();
  if (xs.size() < 2) fail(ErrorKind::domain, "inner decay window holds fewer than two nodes");
  fit.window_lo = *std::min_element(xs.begin(), xs.end());
  fit.window_hi = *std::max_element(xs.begin(), xs.end());
  const LineFit lf = least_squares(xs, ys);
  fit.c = -lf.slope;
  fit.r_squared = lf.r_squared;
  for (std::size_t k = 0; k < xs.size(); ++k) fit.C = std::max(fit.C, std::exp(ys[k] + fit.c * xs[k]));
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] < 0.0) continue;
    if (!(omega_at(sol, i) > decay_floor)) continue;
    ++fit.checked_nodes;
    const double bound = fit.C * std::exp(-fit.c * dist[i]);
    const double ratio = omega_at(sol, i) / bound;
    fit.worst_ratio = std::max(fit.worst_ratio, ratio);
    if (ratio > decay_slack) ++fit.violations;
  }
  finish(fit);
  return fit;
}

DecayFit decay_band(const EpsProblem& p, const EpsSolution& sol, double R2) {
  DecayFit fit;
  fit.tier = DecayTier::band_exp;
  fit.asserted = false;
  fit.window_lo = p.domain().delta / p.eps();
  fit.window_hi = 2.0 * R2 / p.eps();
  if (grid_reach(p, sol.x_eps) + grid_spacing(*p.grid()) < fit.window_hi) {
    fail(ErrorKind::domain, fmt::format("grid does not cover the band up to |x - x_eps| = {:.4g}", fit.window_hi));
  }
  const std::size_t n = node_count(*p.grid());
  for (std::size_t i = 0; i < n; ++i) {
    const double d = distance(node_point(*p.grid(), i), sol.x_eps);
    if (d < fit.window_lo || d > fit.window_hi) continue;
    ++fit.window_nodes;
    fit.C = std::max(fit.C, omega_at(sol, i));
  }
  fit.checked_nodes = fit.window_nodes;
  if (fit.window_nodes == 0) fail(ErrorKind::domain, "band holds no grid node");
  fit.passed = true;
  return fit;
}

BandLadderFit fit_band_ladder(const std::vector<double>& eps, const std::vector<double>& band_max) {
  if (eps.size() != band_max.size() || eps.size() < 2) {
    fail(ErrorKind::configuration, "band fit needs at least two ladder entries");
  }
  BandLadderFit fit;
  fit.eps = eps;
  fit.band_max = band_max;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(band_max[k] > decay_floor)) continue;
    xs.push_back(1.0 / eps[k]);
    ys.push_back(std::log(band_max[k]));
  }
  fit.strictly_decreasing = true;
  for (std::size_t k = 1; k < eps.size(); ++k) {
    if (eps[k] < eps[k - 1] && !(band_max[k] < band_max[k - 1])) fit.strictly_decreasing = false;
    if (eps[k] > eps[k - 1] && !(band_max[k] > band_max[k - 1])) fit.strictly_decreasing = false;
  }
  if (xs.size() < 2) return fit;
  const LineFit lf = least_squares(xs, ys);
  fit.c = -lf.slope;
  fit.r_squared = lf.r_squared;
  for (std::size_t k = 0; k < xs.size(); ++k) fit.C = std::max(fit.C, std::exp(ys[k] + fit.c * xs[k]));
  fit.passed = fit.c > 0.0 && fit.r_squared >= 0.9 && fit.strictly_decreasing;
  return fit;
}

DecayFit decay_tail(const EpsProblem& p, const EpsSolution& sol, double R2, double alpha, const BandLadderFit& band) {
  if (!(alpha > 0.0)) fail(ErrorKind::configuration, "tail exponent alpha must be positive");
  DecayFit fit;
  fit.tier = DecayTier::tail_log;
  fit.alpha = alpha;
  fit.c = band.c;
  fit.C = band.C;
  fit.r_squared = band.r_squared;
  fit.window_lo = R2 / p.eps();
  const std::size_t n = node_count(*p.grid());
  const double bound = band.C * std::exp(-band.c / p.eps());
  for (std::size_t i = 0; i < n; ++i) {
    const double r = node_radius(*p.grid(), i);
    if (r <= fit.window_lo) continue;
    fit.window_hi = std::max(fit.window_hi, r);
    ++fit.window_nodes;
    const double weighted = omega_at(sol, i) * r * std::pow(std::log(r), alpha);
    const double ratio = bound > 0.0 ? weighted / bound : std::numeric_limits<double>::infinity();
    fit.worst_ratio = std::max(fit.worst_ratio, ratio);
    if (ratio > decay_slack) ++fit.violations;
  }
  fit.checked_nodes = fit.window_nodes;
  if (fit.window_nodes == 0) fail(ErrorKind::domain, fmt::format("grid does not reach |x| > {:.4g}", fit.window_lo));
  finish(fit);
  return fit;
}

double envelope_value(double s, double eps, double c, double C, double alpha) {
  return C * std::exp(-(c / eps) * s / (1.0 + s)) / (1.0 + s) * std::pow(std::log(2.0 + s), -alpha);
}

DecayFit rescaled_envelope(const EpsProblem& p, const EpsSolution& sol, double alpha) {
  if (!(alpha > 0.0)) fail(ErrorKind::configuration, "envelope exponent alpha must be positive");
  DecayFit fit;
  fit.tier = DecayTier::envelope;
  fit.alpha = alpha;
  const double eps = p.eps();
  const double delta = p.domain().delta;
  const std::size_t n = node_count(*p.grid());
  std::vector<double> s_all(n);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = eps * distance(node_point(*p.grid(), i), sol.x_eps);
    s_all[i] = s;
    const double w = omega_at(sol, i);
    if (s > delta || !(w > decay_floor)) continue;
    // log omega + log(1+s) + alpha log log(2+s) = log C - (c/eps) s/(1+s)
    xs.push_back(s / (1.0 + s) / eps);
    ys.push_back(std::log(w) + std::log(1.0 + s) + alpha * std::log(std::log(2.0 + s)));
  }
  fit.window_nodes = xs.size();
  if (xs.size() < 2) fail(ErrorKind::domain, "envelope window holds fewer than two nodes");
  fit.window_lo = 0.0;
  fit.window_hi = delta;
  const LineFit lf = least_squares(xs, ys);
  fit.c = -lf.slope;
  fit.r_squared = lf.r_squared;
  for (std::size_t k = 0; k < xs.size(); ++k) fit.C = std::max(fit.C, std::exp(ys[k] + fit.c * xs[k]));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(omega_at(sol, i) > decay_floor)) continue;
    ++fit.checked_nodes;
    const double ratio = omega_at(sol, i) / envelope_value(s_all[i], eps, fit.c, fit.C, alpha);
    fit.worst_ratio = std::max(fit.worst_ratio, ratio);
    if (ratio > decay_slack) ++fit.violations;
  }
  finish(fit);
  return fit;
}

bool truncation_consistency(const EpsProblem& p, const EpsSolution& sol, double tol) {
  return truncation_report(p, sol, tol).original_equation_solved;
}

std::vector<DecayProfileRow> decay_profile(const EpsProblem& p, const EpsSolution& sol, const DecayFit& fit) {
  std::vector<DecayProfileRow> rows;
  const std::size_t n = node_count(*p.grid());
  const double h = grid_spacing(*p.grid());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 x = node_point(*p.grid(), i);
    const Vec3 d = x - sol.x_eps;
    if (d.x < -0.5 * h || std::abs(d.y) > 0.5 * h || std::abs(d.z) > 0.5 * h) continue;
    DecayProfileRow row;
    row.distance = p.eps() * d.norm();
    row.omega = omega_at(sol, i);
    row.envelope = envelope_value(row.distance, p.eps(), fit.c, fit.C, fit.alpha);
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(),
            [](const DecayProfileRow& l, const DecayProfileRow& r) { return l.distance < r.distance; });
  return rows;
}

}  // namespace cnls
