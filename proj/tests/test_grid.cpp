#include <doctest.h>

#include "cnls/error.hpp"
#include "cnls/grid.hpp"
#include "cnls/linalg.hpp"
#include "support.hpp"

using namespace cnls;
using namespace cnls::test;

TEST_CASE("radial grid layout") {
  RadialGrid g(20.0, 400);
  CHECK(g.spacing() == doctest::Approx(0.05));
  CHECK(g.node(0) == doctest::Approx(0.05));
  CHECK(g.node(399) == doctest::Approx(20.0));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g.node(i) > g.node(i - 1));
  CHECK_THROWS_AS(RadialGrid(10.0, 63), Error);
  try {
    RadialGrid(10.0, 10);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::configuration);
  }
}

TEST_CASE("cartesian grid layout") {
  CartesianGrid3 g(4.0, 32);
  CHECK(g.spacing() == doctest::Approx(0.25));
  CHECK(g.coord(0) == doctest::Approx(-3.875));
  CHECK(g.coord(31) == doctest::Approx(3.875));
  CHECK_THROWS_AS(CartesianGrid3(4.0, 31), Error);
}

TEST_CASE("radial laplacian of r^2 is 6 to second order") {
  for (std::size_t n : {200u, 400u}) {
    auto g = make_grid(RadialGrid(10.0, n));
    auto lap = laplacian(radial(g, [](double r) { return r * r; }));
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) err = std::max(err, std::abs(lap[i] - 6.0));
    CHECK(err < 1e-9);  // the stencil on r f is exact for cubics
  }
}

TEST_CASE("radial laplacian of exp(-r) vanishes at r = 2 with O(h^2) error") {
  std::vector<double> errs;
  for (std::size_t n : {500u, 1000u, 2000u}) {
    auto g = make_grid(RadialGrid(20.0, n));
    auto f = radial(g, [](double r) { return std::exp(-r); });
    auto lap = laplacian(f);
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double r = node_radius(*g, i);
      if (r < 0.5 || r > 15.0) continue;
      err = std::max(err, std::abs(lap[i] - std::exp(-r) * (1.0 - 2.0 / r)));
    }
    const std::size_t at2 = static_cast<std::size_t>(std::lround(2.0 / (20.0 / n))) - 1;
    CHECK(std::abs(lap[at2]) < 10.0 * std::pow(20.0 / n, 2));
    errs.push_back(err);
  }
  CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("laplacian of zero is zero") {
  auto g = make_grid(CartesianGrid3(3.0, 32));
  auto lap = laplacian(ScalarField(g));
  for (double x : lap.values) CHECK(x == 0.0);
}

TEST_CASE("radial quadrature") {
  auto g = make_grid(RadialGrid(20.0, 4000));
  CHECK(integrate(ScalarField(g)) == 0.0);
  CHECK(rel(integrate(radial(g, [](double r) { return std::exp(-2.0 * r); })), pi) < 1e-6);
  CHECK(rel(integrate(radial(g, [](double r) { return std::exp(-2.0 * r) / (r * r); })), 2.0 * pi) < 1e-4);
}

TEST_CASE("gradient norm") {
  auto g = make_grid(RadialGrid(30.0, 6000));
  auto f = radial(g, [](double r) { return std::exp(-r); });
  CHECK(rel(grad_norm_sq(f), pi) < 1e-4);
  CHECK(grad_norm_sq(ScalarField(g)) == 0.0);
  ScalarField f2 = f;
  for (double& x : f2.values) x *= 2.0;
  CHECK(rel(grad_norm_sq(f2), 4.0 * grad_norm_sq(f)) < 1e-13);
}

TEST_CASE("summation by parts holds node for node") {
  for (GridPtr g : {make_grid(RadialGrid(8.0, 256)), make_grid(CartesianGrid3(3.0, 32))}) {
    auto f = sample(g, [](const Vec3& x) {
      return std::exp(-(x - Vec3{0.3, -0.2, 0.1}).norm() * (x - Vec3{0.3, -0.2, 0.1}).norm());
    });
    if (is_radial(*g)) f.values.back() = 0.0;
    auto lap = laplacian(f);
    auto w = cell_weights(*g);
    double lhs = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) lhs -= w[i] * f[i] * lap[i];
    CHECK(rel(lhs, grad_norm_sq(f)) < 1e-12);
  }
}

TEST_CASE("distance to a region") {
  auto rg = make_grid(RadialGrid(8.0, 800));
  auto whole = dist_to_set(rg, [](const Vec3&) { return true; });
  for (double d : whole.values) CHECK(d == 0.0);
  auto d = dist_to_set(rg, [](const Vec3& x) { return x.norm() <= 1.0; });
  const std::size_t at3 = 299;  // r = 3
  CHECK(node_radius(*rg, at3) == doctest::Approx(3.0));
  CHECK(std::abs(d[at3] - 2.0) <= grid_spacing(*rg));

  auto cg = make_grid(CartesianGrid3(4.0, 32));
  const auto& c = std::get<CartesianGrid3>(*cg);
  const double h = c.spacing();
  auto in_cell = [h](double t) { return t > 0.0 && t < h; };
  auto dc = dist_to_set(cg, [&](const Vec3& x) { return in_cell(x.x) && in_cell(x.y) && in_cell(x.z); });
  CHECK(std::abs(dc[c.index(0, 0, 0)] - std::sqrt(3.0) * 4.0) <= 2.0 * c.spacing());
  CHECK_THROWS_AS(dist_to_set(cg, [](const Vec3&) { return false; }), Error);
}

TEST_CASE("shifted Laplace solver inverts the operator") {
  for (GridPtr g : {make_grid(RadialGrid(10.0, 300)), make_grid(CartesianGrid3(3.0, 32))}) {
    ShiftedLaplaceSolver solver(g, 1.5);
    auto rhs = sample(g, [](const Vec3& x) { return std::exp(-x.norm() * x.norm()); });
    ScalarField out(g);
    solver.solve(rhs.values, out.values);
    auto lap = laplacian(out);
    double err = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (is_pinned_node(*g, i)) continue;
      err = std::max(err, std::abs(-lap[i] + 1.5 * out[i] - rhs[i]));
    }
    CHECK(err < 1e-10);
  }
}
