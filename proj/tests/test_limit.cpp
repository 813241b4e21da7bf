#include <doctest.h>

#include "cnls/error.hpp"
#include "cnls/landscape.hpp"
#include "cnls/limit_solver.hpp"
#include "support.hpp"

using namespace cnls;
using namespace cnls::test;

namespace {

LimitProblem problem(double aP, double bP, CouplingParams params) {
  LimitProblem p;
  p.aP = aP;
  p.bP = bP;
  p.params = params;
  p.grid = LimitGridSpec{}.grid_for(aP, bP);
  return p;
}

FieldPair pair_of(const GridPtr& g, double (*u)(double), double (*v)(double)) {
  return FieldPair(radial(g, u), radial(g, v));
}

}  // namespace

TEST_CASE("quadratic and quartic parts") {
  LimitProblem p = problem(1.0, 1.0, {1.0, 1.0, 1.0});
  p.grid = make_grid(RadialGrid(30.0, 6000));
  auto zero = zero_pair(p.grid);
  CHECK(quadratic_part(p, zero) == 0.0);
  CHECK(quartic_part(p, zero) == 0.0);

  auto w = pair_of(p.grid, [](double r) { return std::exp(-r); }, [](double) { return 0.0; });
  CHECK(rel(quadratic_part(p, w), 2.0 * pi) < 1e-4);

  auto same = pair_of(p.grid, [](double r) { return std::exp(-r * r); }, [](double r) { return std::exp(-r * r); });
  // quartic_part uses the node weights of the solver inner product
  const auto w8 = cell_weights(*p.grid);
  double u4 = 0.0;
  for (std::size_t i = 0; i < w8.size(); ++i) u4 += w8[i] * std::pow(same.u[i], 4);
  CHECK(rel(quartic_part(p, same), 4.0 * u4) < 1e-12);
}

TEST_CASE("fiber scale and the scale-invariant energy") {
  LimitProblem p = problem(1.0, 2.0, {1.0, 1.0, 3.0});
  auto w = pair_of(p.grid, [](double r) { return 0.8 * std::exp(-r * r / 2); },
                   [](double r) { return 0.5 * std::exp(-r * r / 3); });
  const double A = quadratic_part(p, w), B = quartic_part(p, w);
  const double t = fiber_scale(p, w);
  CHECK(t == doctest::Approx(std::sqrt(A / B)));
  CHECK(nehari_energy(p, w) == doctest::Approx(A * A / (4 * B)));

  FieldPair w2 = w, wt = w;
  for (std::size_t i = 0; i < w.u.size(); ++i) {
    w2.u[i] *= 2;
    w2.v[i] *= 2;
    wt.u[i] *= t;
    wt.v[i] *= t;
  }
  CHECK(fiber_scale(p, w2) == doctest::Approx(t / 2));
  CHECK(nehari_energy(p, w2) == doctest::Approx(nehari_energy(p, w)).epsilon(1e-12));
  // the Nehari representative satisfies A = B and E = A / 4
  CHECK(quadratic_part(p, wt) == doctest::Approx(quartic_part(p, wt)).epsilon(1e-12));
  CHECK(nehari_energy(p, wt) == doctest::Approx(quadratic_part(p, wt) / 4).epsilon(1e-12));

  try {
    (void)fiber_scale(p, zero_pair(p.grid));
    FAIL("expected a degenerate-candidate error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_candidate);
  }
}

TEST_CASE("shooting oracle") {
  CHECK(rel(unit_energy(), E1_ref) < 1e-8);
  for (double a : {1.0, 2.0, 4.0})
    for (double mu : {0.5, 1.0, 2.0})
      CHECK(rel(scalar_oracle_energy(a, mu), std::sqrt(a) / mu * E1_ref) < 1e-6);
}

TEST_CASE("scalar ground state matches the oracle") {
  for (auto [a, mu] : {std::pair{1.0, 1.0}, {4.0, 1.0}, {1.0, 2.0}}) {
    LimitProblem p = problem(a, a, {mu, mu, 10.0});
    GroundState gs = solve_limit(p, true);
    CHECK(rel(gs.energy, std::sqrt(a) / mu * E1_ref) < 1e-4);
    CHECK(gs.residual <= 1e-8);
    CHECK(gs.radially_monotone);
    CHECK(gs.boundary_ratio < 1e-10);
    CHECK(gs.A == doctest::Approx(gs.B).epsilon(1e-8));
    CHECK(gs.energy == doctest::Approx(gs.A / 4).epsilon(1e-8));
  }
}

TEST_CASE("symmetric vector ground state has the closed-form energy") {
  for (double lam : {1.0, 4.0})
    for (double beta : {2.0, 3.0}) {
      LimitProblem p = problem(lam, lam, {1.0, 1.0, beta});
      p.beta0 = 1.0;
      GroundState gs = solve_limit(p);
      CHECK(gs.vector);
      CHECK(rel(gs.energy, 2.0 * std::sqrt(lam) * E1_ref / (1.0 + beta)) < 1e-3);
      for (std::size_t i = 0; i < gs.fields.u.size(); ++i) CHECK(gs.fields.u[i] >= 0.0);
      CHECK(gs.radially_monotone);
    }
}

TEST_CASE("vector reduction under scaling and the strict inequality") {
  const CouplingParams params{1.0, 1.0, 3.0};
  for (auto [a, b] : {std::pair{1.0, 1.5}, {0.8, 1.2}}) {
    LimitProblem p1 = problem(a, b, params), p4 = problem(4 * a, 4 * b, params);
    p1.beta0 = p4.beta0 = std::max(a / b, b / a);
    GroundState g1 = solve_limit(p1), g4 = solve_limit(p4);
    CHECK(rel(g4.energy, 2.0 * g1.energy) < 1e-3);
    CHECK(g1.vector);
    CHECK(g1.strict_margin > 0.0);
    auto [ea, eb] = semitrivial_energies(p1);
    CHECK(g1.energy < std::min(ea, eb));
  }
}

TEST_CASE("ground state energy is nonincreasing in beta") {
  const double b0 = 1.5;
  double prev = 1e300;
  for (double beta : {b0 + 0.5, b0 + 1.0, b0 + 2.0}) {
    LimitProblem p = problem(1.0, 1.5, {1.0, 1.0, beta});
    p.beta0 = b0;
    GroundState gs = solve_limit(p);
    CHECK(gs.energy <= prev);
    CHECK(gs.strict_margin > 0.0);
    prev = gs.energy;
  }
}

TEST_CASE("vector solves require beta above beta0") {
  LimitProblem p = problem(1.0, 2.0, {1.0, 1.0, 1.5});
  p.beta0 = 2.0;
  try {
    (void)solve_limit(p);
    FAIL("expected an admissibility error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::admissibility);
  }
  // the scalar solve is still allowed
  CHECK(solve_limit(p, true).energy > 0.0);
}

TEST_CASE("semitrivial energies") {
  LimitProblem p = problem(1.0, 1.0, {1.0, 1.0, 3.0});
  auto [ea, eb] = semitrivial_energies(p);
  CHECK(ea == doctest::Approx(eb));
  CHECK(rel(ea, E1_ref) < 1e-8);
}

TEST_CASE("limit decay rate scales with sqrt(a)") {
  LimitProblem p1 = problem(1.0, 1.0, {1.0, 1.0, 3.0}), p4 = problem(4.0, 4.0, {1.0, 1.0, 3.0});
  p1.beta0 = p4.beta0 = 1.0;
  const LimitDecayFit f1 = decay_fit_limit(solve_limit(p1));
  const LimitDecayFit f4 = decay_fit_limit(solve_limit(p4));
  CHECK(f1.C3 > 1.0);
  CHECK(f1.C3 < 1.2);  // e^{-r}/r steepens the apparent slope above 1
  CHECK(f4.C3 / f1.C3 == doctest::Approx(2.0).epsilon(0.01));
  CHECK(f1.r_squared > 0.99);
  CHECK(f1.violations == 0);
}
