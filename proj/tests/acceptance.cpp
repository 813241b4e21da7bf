// Acceptance run: every criterion prints one PASS/FAIL line; the exit status
// is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cnls/config.hpp"
#include "cnls/experiment.hpp"
#include "cnls/limit_solver.hpp"
#include "cnls/verify.hpp"

namespace fs = std::filesystem;
using namespace cnls;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

/// Runs one criterion; an exception counts as a failure with its message.
void criterion(int id, const std::string& title, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [ok, detail] = body();
    report(id, title, ok, detail);
  } catch (const std::exception& e) {
    report(id, title, false, std::string("exception: ") + e.what());
  }
}

LimitProblem limit_problem(double aP, double bP, CouplingParams params, std::optional<double> b0) {
  LimitProblem p;
  p.aP = aP;
  p.bP = bP;
  p.params = params;
  p.grid = LimitGridSpec{}.grid_for(aP, bP);
  p.beta0 = b0;
  return p;
}

/// Every vector ground state computed here; criteria 4 and 5 inspect them all.
std::vector<GroundState> vector_solves;
std::vector<ScalarField> solver_fields;

GroundState keep(GroundState gs) {
  if (gs.vector) vector_solves.push_back(gs);
  solver_fields.push_back(gs.fields.u);
  if (gs.vector) solver_fields.push_back(gs.fields.v);
  return gs;
}

bool nonincreasing(const std::vector<double>& xs, double slack = 0.0) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[i - 1] + slack) return false;
  return true;
}

bool strictly_decreasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] < xs[i - 1])) return false;
  return true;
}

std::string list(const std::vector<double>& xs) {
  std::string s;
  for (double x : xs) s += fmt::format("{}{:.3g}", s.empty() ? "" : " ", x);
  return "[" + s + "]";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const fs::path root = fs::temp_directory_path() / "cnls_acceptance";
  fs::remove_all(root);
  const double E1 = unit_energy();

  criterion(1, "oracle equivalence", [&] {
    bool ok = true;
    std::string detail;
    for (auto [a, mu] : {std::pair{1.0, 1.0}, {4.0, 1.0}, {1.0, 2.0}}) {
      Stopwatch t;
      GroundState gs = keep(solve_limit(limit_problem(a, a, {mu, mu, 10.0}, std::nullopt), true));
      const double oracle = scalar_oracle_energy(a, mu);
      const double secs = t.seconds();
      const double err = rel(gs.energy, oracle);
      ok = ok && err <= 1e-4 && secs < 10.0;
      detail += fmt::format("(a={},mu={}) rel {:.2e} in {:.2f}s; ", a, mu, err, secs);
    }
    return std::pair{ok, detail};
  });

  criterion(2, "scaling laws", [&] {
    double worst_scalar = 0.0;
    for (double a : {1.0, 2.0, 4.0})
      for (double mu : {0.5, 1.0, 2.0}) {
        GroundState gs = keep(solve_limit(limit_problem(a, a, {mu, mu, 10.0}, std::nullopt), true));
        worst_scalar = std::max(worst_scalar, rel(gs.energy, std::sqrt(a) / mu * E1));
      }
    double worst_vector = 0.0;
    const CouplingParams params{1.0, 1.0, 3.0};
    for (auto [a, b] : {std::pair{1.0, 1.5}, {0.8, 1.2}}) {
      const double b0 = std::max(a / b, b / a);
      GroundState g1 = keep(solve_limit(limit_problem(a, b, params, b0)));
      GroundState g4 = keep(solve_limit(limit_problem(4 * a, 4 * b, params, b0)));
      worst_vector = std::max(worst_vector, rel(g4.energy, 2.0 * g1.energy));
    }
    return std::pair{worst_scalar <= 1e-3 && worst_vector <= 1e-3,
                     fmt::format("scalar 3x3 worst rel {:.2e}; m(4a,4b) vs 2m(a,b) worst rel {:.2e}", worst_scalar,
                                 worst_vector)};
  });

  criterion(3, "symmetric closed form", [&] {
    double worst = 0.0;
    for (double lam : {1.0, 4.0})
      for (double beta : {2.0, 3.0}) {
        GroundState gs = keep(solve_limit(limit_problem(lam, lam, {1.0, 1.0, beta}, 1.0)));
        worst = std::max(worst, rel(gs.energy, 2.0 * std::sqrt(lam) * E1 / (1.0 + beta)));
      }
    return std::pair{worst <= 1e-3, fmt::format("four cases, worst rel {:.2e}", worst)};
  });

  criterion(4, "strict vector inequality", [&] {
    const double b0 = 1.5;
    std::vector<double> levels;
    for (double beta : {b0 + 0.5, b0 + 1.0, b0 + 2.0})
      levels.push_back(keep(solve_limit(limit_problem(1.0, 1.5, {1.0, 1.0, beta}, b0))).energy);
    double min_margin = 1e300;
    bool all_vector = true;
    for (const auto& gs : vector_solves) {
      min_margin = std::min(min_margin, gs.strict_margin);
      all_vector = all_vector && !gs.collapsed;
    }
    const bool ok = min_margin > 0.0 && all_vector && nonincreasing(levels);
    return std::pair{ok, fmt::format("{} vector solves, min margin {:.4g}; m along beta0+{{0.5,1,2}} = {}",
                                     vector_solves.size(), min_margin, list(levels))};
  });

  // Standard and constant-potential pipelines, shared by criteria 5-12.
  ExperimentConfig standard = parse_config(standard_config_text(), "<built-in>");
  ExperimentConfig constant = load_config(fs::path(CNLS_SOURCE_DIR) / "configs" / "constant.yaml");
  Experiment std_run(standard, root / "standard", 1);
  Experiment const_run(constant, root / "constant", 1);
  double std_landscape_s = 0.0, const_landscape_s = 0.0, concentrate_s = 0.0;
  const LandscapeMap* std_map = nullptr;
  const LandscapeMap* const_map = nullptr;
  const ConcentrationSeries* series = nullptr;
  const ConcentrationSeries* const_series = nullptr;
  std::optional<VerifyOutcome> verdict;
  std::string pipeline_error;
  try {
    Stopwatch t1;
    std_map = &std_run.landscape();
    std_landscape_s = t1.seconds();
    Stopwatch t2;
    const_map = &const_run.landscape();
    const_landscape_s = t2.seconds();
    Stopwatch t3;
    series = &std_run.concentrate();
    concentrate_s = t3.seconds();
    verdict = std_run.verify();
    const_series = &const_run.concentrate();
  } catch (const std::exception& e) {
    pipeline_error = e.what();
  }
  auto need = [&](bool have) {
    if (!have) throw std::runtime_error("pipeline failed: " + pipeline_error);
  };

  criterion(5, "Hardy inequality", [&] {
    need(series != nullptr);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), width(0.2, 4.0), centre(0.0, 5.0), shift(-1.0, 1.0);
    const GridPtr radial = make_grid(RadialGrid(20.0, 2000));
    const GridPtr box = make_grid(CartesianGrid3(6.0, 32));
    double worst = 1e300;
    std::size_t random_ok = 0, outputs_ok = 0, outputs = 0;
    for (int k = 0; k < 100; ++k) {
      const GridPtr& g = k % 4 == 3 ? box : radial;
      std::vector<std::array<double, 4>> terms(5);
      for (auto& t : terms) t = {amp(rng), width(rng), centre(rng), shift(rng)};
      ScalarField f(g);
      for (std::size_t i = 0; i < f.size(); ++i) {
        const Vec3 x = node_point(*g, i);
        for (auto [a, w, c, s] : terms) {
          const double r = is_radial(*g) ? x.norm() : distance(x, {s, -s, 0.5 * s});
          f[i] += a * std::exp(-std::pow((r - c) / w, 2));
        }
      }
      if (is_radial(*g)) f.values.back() = 0.0;
      worst = std::min(worst, hardy_margin(f) / grad_norm_sq(f));
      random_ok += hardy_holds(f);
    }
    std::vector<ScalarField> fields = solver_fields;
    for (const auto& sol : series->solutions) {
      if (!sol) continue;
      fields.push_back(sol->fields.u);
      fields.push_back(sol->fields.v);
    }
    for (const auto& f : fields) {
      ++outputs;
      outputs_ok += hardy_holds(f);
      worst = std::min(worst, hardy_margin(f) / grad_norm_sq(f));
    }
    const bool ok = random_ok == 100 && outputs_ok == outputs;
    return std::pair{ok, fmt::format("random {}/100, solver outputs {}/{}, min margin/|grad|^2 {:.4g}", random_ok,
                                     outputs_ok, outputs, worst)};
  });

  criterion(6, "landscape and V4", [&] {
    need(std_map && const_map);
    const bool origin_only = std_map->M_set.size() == 1 && std_map->M_set[0] == Vec3{0, 0, 0};
    bool below_semitrivial = true;
    for (const auto& s : std_map->samples) {
      const double semi = std::min(std::sqrt(s.aP) / standard.params.mu1, std::sqrt(s.bP) / standard.params.mu2) * E1;
      below_semitrivial = below_semitrivial && s.m < semi;
    }
    const bool ok = origin_only && std_map->v4_holds && std_map->margin > 0.0 && !const_map->v4_holds &&
                    std_landscape_s < 60.0 && const_landscape_s < 60.0 && below_semitrivial;
    return std::pair{ok, fmt::format("standard: |M| = {}, origin {}, V4 {} margin {:.4g}, {} samples / {} solves in "
                                     "{:.2f}s; constant: V4 {} in {:.2f}s",
                                     std_map->M_set.size(), origin_only, std_map->v4_holds, std_map->margin,
                                     std_map->samples.size() + std_map->boundary.size(), std_map->cache_entries,
                                     std_landscape_s, const_map->v4_holds, const_landscape_s)};
  });

  auto column = [&](const ConcentrationSeries& s, double ConcentrationRow::*field) {
    std::vector<double> xs;
    for (const auto& r : s.rows) xs.push_back(r.*field);
    return xs;
  };

  criterion(7, "concentration at M", [&] {
    need(series && std_map);
    const auto dist = column(*series, &ConcentrationRow::dist_to_M);
    const bool ok = nonincreasing(dist) && dist.back() <= 2.0 * std_map->spacing && concentrate_s < 900.0;
    return std::pair{ok, fmt::format("dist {} (bound {:.4g}), ladder solved in {:.1f}s", list(dist),
                                     2.0 * std_map->spacing, concentrate_s)};
  });

  criterion(8, "level pinching", [&] {
    need(series && std_map);
    const auto gap = column(*series, &ConcentrationRow::level_gap);
    const double last = series->rows.back().level;
    const bool ok = last <= std_map->m0 * 1.05 && strictly_decreasing(gap);
    return std::pair{ok, fmt::format("c_eps at smallest eps {:.8g} vs m0 {:.8g}; gaps {}", last, std_map->m0,
                                     list(gap))};
  });

  criterion(9, "sup-norm lower bound", [&] {
    need(series);
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < series->rows.size(); ++i) {
      const auto& r = series->rows[i];
      if (i > 0) ok = ok && r.peak_value >= r.peak_bound;
      detail += fmt::format("{:.3g}>={:.3g} ", r.peak_value, r.peak_bound);
    }
    return std::pair{ok, detail};
  });

  criterion(10, "truncation inactive", [&] {
    need(verdict.has_value());
    const auto& t = verdict->truncation;
    const bool ok = t.active_fraction == 0.0 && t.max_ratio < 1.0 && t.untruncated_residual <= 1e-6 &&
                    t.original_equation_solved;
    return std::pair{ok, fmt::format("{} outside nodes, max F/(gamma^2/4) {:.3g}, untruncated residual {:.3g}",
                                     t.outside_nodes, t.max_ratio, t.untruncated_residual)};
  });

  criterion(11, "decay battery", [&] {
    need(verdict.has_value());
    const auto& v = *verdict;
    bool ok = v.not_covered.empty() && v.band_fit.passed && v.band_fit.c > 0.0 && v.band_fit.r_squared >= 0.9;
    const DecayFit& inner = v.inner.back();
    ok = ok && inner.passed && inner.violations == 0 && inner.c > 0.0;
    std::string detail = fmt::format("inner c {:.3g}; band c {:.3g} R^2 {:.4f}", inner.c, v.band_fit.c,
                                     v.band_fit.r_squared);
    for (const auto* tiers : {&v.tail, &v.envelope})
      for (const auto& f : *tiers) {
        ok = ok && f.passed && f.violations == 0;
        detail += fmt::format("; {} alpha {} worst {:.3f}", to_string(f.tier), f.alpha, f.worst_ratio);
      }
    ok = ok && v.tail.size() == 2 && v.envelope.size() == 2;
    return std::pair{ok, detail};
  });

  criterion(12, "profile convergence", [&] {
    need(series && const_series);
    const auto single = column(*series, &ConcentrationRow::profile_error);
    const auto flat = column(*const_series, &ConcentrationRow::profile_error);
    // On constant potentials the eps problem equals the limit problem and the
    // errors sit at rounding level; they must not grow beyond it.
    const bool ok = strictly_decreasing(single) && single.back() <= 0.05 && nonincreasing(flat, 1e-12) &&
                    flat.back() <= 0.02;
    return std::pair{ok, fmt::format("single well {}; constant {}", list(single), list(flat))};
  });

  std::printf("%s: %d of 12 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
