#include <doctest.h>

#include <random>

#include "cnls/config.hpp"
#include "cnls/error.hpp"
#include "cnls/verify.hpp"
#include "support.hpp"

using namespace cnls;
using namespace cnls::test;

TEST_CASE("Hardy margin closed form") {
  auto g = make_grid(RadialGrid(30.0, 6000));
  CHECK(hardy_margin(ScalarField(g)) == 0.0);
  auto f = radial(g, [](double r) { return std::exp(-r); });
  CHECK(rel(hardy_margin(f), pi / 2) < 1e-4);
  ScalarField f2 = f;
  for (double& x : f2.values) x *= 2.0;
  CHECK(rel(hardy_margin(f2), 4.0 * hardy_margin(f)) < 1e-12);
}

TEST_CASE("Hardy inequality on random smooth fields") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), width(0.3, 4.0), centre(0.0, 6.0);
  for (GridPtr g : {make_grid(RadialGrid(20.0, 2000)), make_grid(CartesianGrid3(6.0, 32))}) {
    for (int k = 0; k < 20; ++k) {
      std::vector<std::array<double, 3>> terms(4);
      for (auto& t : terms) t = {amp(rng), width(rng), centre(rng)};
      auto f = sample(g, [&](const Vec3& x) {
        double s = 0.0;
        for (auto [a, w, c] : terms) s += a * std::exp(-std::pow((x.norm() - c) / w, 2));
        return s;
      });
      if (is_radial(*g)) f.values.back() = 0.0;
      CHECK(hardy_holds(f));
    }
  }
}

TEST_CASE("envelope shape") {
  double prev = envelope_value(0.0, 0.2, 1.0, 2.0, 1.0);
  CHECK(prev == doctest::Approx(2.0 / std::log(2.0)));
  for (int k = 1; k < 100; ++k) {
    const double v = envelope_value(0.1 * k, 0.2, 1.0, 2.0, 1.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("band ladder fit") {
  std::vector<double> eps{0.4, 0.3, 0.2, 0.15, 0.1};
  std::vector<double> band;
  for (double e : eps) band.push_back(3.0 * std::exp(-0.7 / e));
  BandLadderFit fit = fit_band_ladder(eps, band);
  CHECK(fit.c == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(fit.C == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.passed);

  std::vector<double> flat(eps.size(), 1e-3);
  CHECK_FALSE(fit_band_ladder(eps, flat).passed);
}

TEST_CASE("decay tiers on a concentrated solution") {
  ExperimentConfig cfg = parse_config(standard_config_text());
  const double R2 = default_R2(cfg.domain, tail_radius(cfg.pots, cfg.domain));
  std::vector<double> eps{0.4, 0.3, 0.2};
  std::vector<double> band_max;
  std::vector<std::pair<std::shared_ptr<EpsProblem>, EpsSolution>> runs;
  for (double e : eps) {
    auto p = std::make_shared<EpsProblem>(cfg.pots, cfg.domain, cfg.params, e,
                                          make_eps_grid(cfg.pots, cfg.domain, e, R2, cfg.eps_grid));
    EpsSolution sol = solve_eps(*p, limit_state_on(*p, {0, 0, 0}, {}).fields);
    DecayFit inner = decay_inner(*p, sol);
    CHECK(inner.passed);
    CHECK(inner.violations == 0);
    CHECK(inner.c > 0.0);
    CHECK(inner.worst_ratio <= decay_slack);
    DecayFit band = decay_band(*p, sol, R2);
    CHECK_FALSE(band.asserted);
    band_max.push_back(band.C);
    runs.emplace_back(p, std::move(sol));
  }
  BandLadderFit fit = fit_band_ladder(eps, band_max);
  CHECK(fit.passed);
  const auto& [p, sol] = runs.back();
  for (double alpha : {0.6, 1.0}) {
    DecayFit tail = decay_tail(*p, sol, R2, alpha, fit);
    CHECK(tail.passed);
    DecayFit env = rescaled_envelope(*p, sol, alpha);
    CHECK(env.passed);
    CHECK(env.violations == 0);
    CHECK(env.c > 0.0);
  }
  CHECK(truncation_consistency(*p, sol, 1e-6));
  CHECK(hardy_holds(sol.fields.u));
  CHECK(hardy_holds(sol.fields.v));

  auto profile = decay_profile(*p, sol, rescaled_envelope(*p, sol, 1.0));
  REQUIRE(profile.size() > 10);
  CHECK(profile.front().distance == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

  // a grid that stops short of the band is reported, not silently accepted
  auto short_grid = make_grid(RadialGrid(20.0, 1000));
  EpsProblem small(cfg.pots, cfg.domain, cfg.params, 0.4, short_grid);
  EpsSolution s2 = solve_eps(small, limit_state_on(small, {0, 0, 0}, {}).fields);
  try {
    (void)decay_band(small, s2, R2);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
}
