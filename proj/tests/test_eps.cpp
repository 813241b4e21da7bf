#include <doctest.h>

#include "cnls/config.hpp"
#include "cnls/eps_solver.hpp"
#include "cnls/error.hpp"
#include "support.hpp"

using namespace cnls;
using namespace cnls::test;

namespace {

struct Standard {
  ExperimentConfig cfg = parse_config(standard_config_text());
  double R2 = default_R2(cfg.domain, tail_radius(cfg.pots, cfg.domain));

  EpsProblem problem(double eps) const {
    return EpsProblem(cfg.pots, cfg.domain, cfg.params, eps, make_eps_grid(cfg.pots, cfg.domain, eps, R2, cfg.eps_grid));
  }
};

const Standard& standard() {
  static const Standard s;
  return s;
}

/// Golden-section maximum of t -> J_eps(t w) on [lo, hi].
double brute_fiber_max(const EpsProblem& p, const FieldPair& w, double lo, double hi) {
  auto J = [&](double t) {
    FieldPair tw = w;
    for (std::size_t i = 0; i < w.u.size(); ++i) {
      tw.u[i] *= t;
      tw.v[i] *= t;
    }
    return J_eps(p, tw);
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  while (b - a > 1e-11 * b) {
    if (J(c) > J(d)) b = d; else a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return 0.5 * (a + b);
}

const std::shared_ptr<EpsSolution>& solution_03() {
  static const std::shared_ptr<EpsSolution> sol = [] {
    EpsProblem p = standard().problem(0.3);
    GroundState start = limit_state_on(p, {0, 0, 0}, {});
    return std::make_shared<EpsSolution>(solve_eps(p, start.fields));
  }();
  return sol;
}

}  // namespace

TEST_CASE("eps problem setup") {
  const auto& s = standard();
  EpsProblem p = s.problem(0.3);
  CHECK(is_radial(*p.grid()));
  CHECK(node_radius(*p.grid(), node_count(*p.grid()) - 1) >= 2.0 * s.R2 / 0.3);
  CHECK(grid_spacing(*p.grid()) <= 0.05);
  for (std::size_t i = 0; i < p.inside().size(); ++i) {
    const double r = node_radius(*p.grid(), i);
    CHECK(static_cast<bool>(p.inside()[i]) == (0.3 * r < s.cfg.domain.rho0));
    if (!p.inside()[i]) CHECK(p.gamma()[i] == doctest::Approx(gamma_raw(r, 0.3)));
  }
  CHECK_THROWS_AS(EpsProblem(s.cfg.pots, s.cfg.domain, s.cfg.params, 4.0, p.grid()), Error);
}

TEST_CASE("functional on fields supported in O_eps") {
  EpsProblem p = standard().problem(0.3);
  CHECK(J_eps(p, zero_pair(p.grid())) == 0.0);
  auto bump = [](double r) { return r < 8.0 ? std::pow(std::cos(pi * r / 16.0), 4) : 0.0; };
  FieldPair w(radial(p.grid(), bump), radial(p.grid(), [&](double r) { return 0.5 * bump(r); }));
  double quartic = 0.0;
  for (std::size_t i = 0; i < w.u.size(); ++i) quartic += p.weights()[i] * F(w.u[i], w.v[i], p.params());
  const double A = eps_quadratic(p, w);
  CHECK(J_eps(p, w) == doctest::Approx(0.5 * A - quartic).epsilon(1e-13));
  CHECK(fiber_max_t(p, w) == doctest::Approx(std::sqrt(A / (4.0 * quartic))).epsilon(1e-12));
  CHECK(fiber_max_t(p, w) == doctest::Approx(brute_fiber_max(p, w, 1e-3, 1e2)).epsilon(1e-8));

  EpsSolution sol = describe_solution(p, w);
  TruncationReport rep = truncation_report(p, sol, 1e-6);
  CHECK(rep.active_fraction == 0.0);
}

TEST_CASE("fiber maximum with the truncation active") {
  EpsProblem p = standard().problem(0.3);
  // a wide profile that reaches far outside O_eps
  FieldPair w(radial(p.grid(), [](double r) { return 3.0 * std::exp(-r / 20.0); }),
              radial(p.grid(), [](double r) { return 2.0 * std::exp(-r / 15.0); }));
  const double t = fiber_max_t(p, w);
  CHECK(t == doctest::Approx(brute_fiber_max(p, w, 1e-4, 1e3)).epsilon(1e-7));
}

TEST_CASE("candidates need mass in O_eps") {
  EpsProblem p = standard().problem(0.3);
  FieldPair outside(radial(p.grid(), [](double r) { return r > 20.0 && r < 30.0 ? 1.0 : 0.0; }),
                    ScalarField(p.grid()));
  try {
    (void)fiber_max_t(p, outside);
    FAIL("expected a candidate error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::candidate);
  }
}

TEST_CASE("solution at eps = 0.3") {
  const EpsSolution& sol = *solution_03();
  EpsProblem p = standard().problem(0.3);
  CHECK(sol.fiber_t == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.level > 0.0);
  CHECK(sol.residual <= 1e-8);
  CHECK(sol.hardy_penalty_ratio <= 0.5);
  CHECK(sol.both_positive_at_max);
  CHECK(p.domain().in_O(0.3 * sol.x_eps));
  double best = 0.0;
  for (std::size_t i = 0; i < sol.fields.u.size(); ++i) {
    CHECK(sol.fields.u[i] >= 0.0);
    CHECK(sol.fields.v[i] >= 0.0);
    if (p.inside()[i]) best = std::max(best, sol.fields.u[i] + sol.fields.v[i]);
  }
  CHECK(sol.peak_value == doctest::Approx(best));
  CHECK(sol.truncation_active_fraction == 0.0);
  // reloading recomputes the same diagnostics
  EpsSolution again = describe_solution(p, sol.fields);
  CHECK(again.level == sol.level);
  CHECK(again.x_eps == sol.x_eps);
}

TEST_CASE("ladder must stay below eps1") {
  const auto& s = standard();
  ConcentrationOptions o;
  o.eps_ladder = {0.5};
  LandscapeMap map;
  map.M_set = {Vec3{}};
  map.m0 = 1.0;
  CHECK_THROWS_AS(concentration_series(s.cfg.pots, s.cfg.domain, s.cfg.params, map, o), Error);
}
