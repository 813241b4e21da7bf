#include "cnls/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fftw3.h>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>
#include <openssl/opensslv.h>
#include <spdlog/spdlog.h>
#include <spdlog/version.h>

#include "cnls/snapshot.hpp"

#ifndef CNLS_VERSION
#define CNLS_VERSION "0.0.0"
#endif

namespace cnls {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kErrorFile = "error.json";

std::string num(double x) { return fmt::format("{:.17g}", x); }

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) fail(ErrorKind::io, fmt::format("write to {} failed", path.string()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json fit_json(const DecayFit& f) {
  return {{"tier", to_string(f.tier)},     {"c", f.c},
          {"C", f.C},                      {"alpha", f.alpha},
          {"window", {f.window_lo, f.window_hi}}, {"window_nodes", f.window_nodes},
          {"checked_nodes", f.checked_nodes}, {"r_squared", f.r_squared},
          {"violations", f.violations},    {"worst_ratio", f.worst_ratio},
          {"slack", decay_slack},          {"asserted", f.asserted},
          {"passed", f.passed}};
}

json limit_fit_json(const LimitDecayFit& f) {
  return {{"C2", f.C2}, {"C3", f.C3}, {"r_squared", f.r_squared}, {"window", {f.r_lo, f.r_hi}},
          {"lift", f.lift}, {"window_nodes", f.window_nodes}, {"violations", f.violations}};
}

json admissibility_json(const Admissibility& a) {
  return {{"a0", a.a0},
          {"b0", a.b0},
          {"a_min_global", a.a_min_global},
          {"b_min_global", a.b_min_global},
          {"tail_liminf_a", a.tail_liminf_a},
          {"tail_liminf_b", a.tail_liminf_b},
          {"max_ratio", a.max_ratio},
          {"sample_spacing", a.sample_spacing},
          {"tube_min_a", a.tube_min_a},
          {"tube_min_b", a.tube_min_b},
          {"V1", a.v1},
          {"V2", a.v2},
          {"V3", a.v3},
          {"tube", a.tube_ok}};
}

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_;
};

fs::path snapshot_path(const fs::path& out, std::size_t k) { return out / "solutions" / fmt::format("eps_{}.cnls", k); }

}  // namespace

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::oracle: return "oracle";
    case Subcommand::ground_state: return "ground-state";
    case Subcommand::landscape: return "landscape";
    case Subcommand::concentrate: return "concentrate";
    case Subcommand::verify: return "verify";
    case Subcommand::all: return "all";
  }
  return "unknown";
}

std::optional<Subcommand> subcommand_from_string(const std::string& name) {
  for (auto s : {Subcommand::oracle, Subcommand::ground_state, Subcommand::landscape, Subcommand::concentrate,
                 Subcommand::verify, Subcommand::all}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

int exit_code_for(ErrorKind kind) {
  return (kind == ErrorKind::configuration || kind == ErrorKind::admissibility) ? 2 : 1;
}

std::string sha256_text(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::io, "SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_text(read_text(path)); }

Experiment::Experiment(ExperimentConfig cfg, fs::path out, std::size_t workers)
    : cfg_(std::move(cfg)), out_(std::move(out)), workers_(std::max<std::size_t>(1, workers)) {
  fs::create_directories(out_);
}

double Experiment::beta0_value() {
  if (!beta0_) {
    const double spacing = cfg_.admissibility_spacing > 0.0 ? cfg_.admissibility_spacing : cfg_.domain.rho0 / 16.0;
    beta0_ = beta0(cfg_.params, cfg_.pots, cfg_.domain.lambda, spacing);
  }
  return *beta0_;
}

void Experiment::check_admissible() {
  if (adm_) return;
  const double spacing = cfg_.admissibility_spacing > 0.0 ? cfg_.admissibility_spacing : cfg_.domain.rho0 / 16.0;
  adm_ = sample_admissibility(cfg_.pots, cfg_.domain, spacing);
  if (!adm_->v1) fail(ErrorKind::admissibility, "(V1) fails: a potential is negative somewhere on the sample");
  if (!adm_->v3) fail(ErrorKind::admissibility, "(V3) fails: a or b is not bounded below by a positive constant on Lambda");
  if (!adm_->tube_ok) fail(ErrorKind::admissibility, "potentials drop below half their Lambda infimum on O^{5 delta}");
  if (!adm_->v2) spdlog::warn("(V2) not confirmed by the sampled tail: liminf of a |x|^2 log|x| looks nonpositive");
  const double b0 = beta0_value();
  if (!(cfg_.params.beta > b0)) {
    fail(ErrorKind::admissibility, fmt::format("beta = {} must exceed beta0 = {:.12g}", cfg_.params.beta, b0));
  }
}

OracleRecord Experiment::oracle() {
  Timer timer;
  OracleRecord rec;
  const std::string key = "scalar-oracle|a=1.000000000000e+00|mu=1.000000000000e+00|rk4|v1";
  rec.cache_file = out_ / "cache" / fmt::format("oracle-{}.json", sha256_text(key).substr(0, 16));
  if (fs::exists(rec.cache_file)) {
    const json doc = json::parse(read_text(rec.cache_file));
    rec.E1_text = doc.at("E1").get<std::string>();
    rec.E1 = std::stod(rec.E1_text);
    rec.from_cache = true;
  } else {
    rec.E1 = unit_energy();
    rec.E1_text = num(rec.E1);
    write_json(rec.cache_file, {{"key", key}, {"E1", rec.E1_text}});
  }
  write_json(out_ / "oracle.json", {{"E1", rec.E1_text},
                                    {"from_cache", rec.from_cache},
                                    {"cache_file", fs::relative(rec.cache_file, out_).generic_string()}});
  runtimes_["oracle"] = timer.seconds();
  spdlog::info("E1 = {} ({})", rec.E1_text, rec.from_cache ? "cache" : "computed");
  return rec;
}

GroundState Experiment::ground_state(double aP, double bP, bool scalar) {
  Timer timer;
  LimitProblem lp;
  lp.aP = aP;
  lp.bP = bP;
  lp.params = cfg_.params;
  lp.grid = cfg_.limit.grid_for(aP, bP);
  if (!scalar) {
    lp.beta0 = std::max(cfg_.params.mu1, cfg_.params.mu2) * std::max(aP / bP, bP / aP);
    if (!(cfg_.params.beta > *lp.beta0)) {
      fail(ErrorKind::admissibility,
           fmt::format("beta = {} must exceed max(mu) max(aP/bP, bP/aP) = {:.12g}", cfg_.params.beta, *lp.beta0));
    }
  }
  GroundState gs = solve_limit(lp, scalar, cfg_.limit.solve);
  const auto [e_u, e_v] = semitrivial_energies(lp);
  json doc = {{"aP", aP},
              {"bP", bP},
              {"mu1", cfg_.params.mu1},
              {"mu2", cfg_.params.mu2},
              {"beta", cfg_.params.beta},
              {"scalar", scalar},
              {"energy", gs.energy},
              {"A", gs.A},
              {"B", gs.B},
              {"residual", gs.residual},
              {"iterations", gs.iterations},
              {"vector", gs.vector},
              {"collapsed", gs.collapsed},
              {"strict_margin", gs.strict_margin},
              {"semitrivial_energies", {e_u, e_v}},
              {"radially_monotone", gs.radially_monotone},
              {"boundary_ratio", gs.boundary_ratio},
              {"decay_fit", limit_fit_json(gs.decay_fit)},
              {"grid", {{"n", node_count(*lp.grid)}, {"r_max", std::get<RadialGrid>(*lp.grid).r_max()}}}};
  if (scalar) {
    const double oracle_e = scalar_oracle_energy(aP, cfg_.params.mu1);
    doc["oracle_energy"] = oracle_e;
    doc["oracle_relative_error"] = std::abs(gs.energy - oracle_e) / oracle_e;
  }
  write_json(out_ / "ground_state.json", doc);
  std::string csv = "r,u,v\n";
  for (std::size_t i = 0; i < node_count(*lp.grid); ++i) {
    csv += fmt::format("{},{},{}\n", num(node_radius(*lp.grid, i)), num(gs.fields.u[i]), num(gs.fields.v[i]));
  }
  write_text(out_ / "ground_state.csv", csv);
  write_snapshot(out_ / "ground_state.cnls", Snapshot{lp.grid, {"u", "v"}, {gs.fields.u, gs.fields.v}});
  runtimes_["ground-state"] = timer.seconds();
  spdlog::info("ground state at ({}, {}): energy {:.12g}, residual {:.3g}, {} iterations", aP, bP, gs.energy,
               gs.residual, gs.iterations);
  return gs;
}

const LandscapeMap& Experiment::landscape() {
  if (landscape_) return *landscape_;
  check_admissible();
  Timer timer;
  ScanOptions so;
  so.spacing = cfg_.landscape_spacing;
  so.workers = workers_;
  so.limit = cfg_.limit;
  so.beta0 = beta0_value();
  landscape_ = scan_m(cfg_.domain, cfg_.pots, cfg_.params, so);
  const LandscapeMap& map = *landscape_;

  std::string csv = "kind,x,y,z,aP,bP,m\n";
  auto rows = [&](const std::vector<LandscapeSample>& set, const char* kind) {
    for (const auto& s : set) {
      csv += fmt::format("{},{},{},{},{},{},{}\n", kind, num(s.P.x), num(s.P.y), num(s.P.z), num(s.aP), num(s.bP),
                         num(s.m));
    }
  };
  rows(map.samples, "interior");
  rows(map.boundary, "boundary");
  write_text(out_ / "landscape.csv", csv);

  json M = json::array();
  for (const auto& P : map.M_set) M.push_back(vec_json(P));
  json doc = {{"m0", map.m0},
              {"M_set", M},
              {"v4_holds", map.v4_holds},
              {"margin", map.margin},
              {"flat", map.flat},
              {"spacing", map.spacing},
              {"interior_samples", map.samples.size()},
              {"boundary_samples", map.boundary.size()},
              {"cache_entries", map.cache_entries},
              {"max_adjacent_variation", map.max_adjacent_variation},
              {"median_adjacent_variation", map.median_adjacent_variation},
              {"continuity_ok", map.continuity_ok},
              {"delta", cfg_.domain.delta},
              {"delta_used", map.delta_used},
              {"delta_shrunk", map.delta_shrunk},
              {"shift_condition", map.shift_condition},
              {"shift_consistent", map.shift_consistent},
              {"beta0", beta0_value()},
              {"admissibility", admissibility_json(*adm_)},
              {"note", "(V4) is certified at sampling resolution only"}};
  doc["coefficient_shift"] = map.coefficient_shift ? json(*map.coefficient_shift) : json(nullptr);
  write_json(out_ / "landscape.json", doc);
  runtimes_["landscape"] = timer.seconds();
  spdlog::info("landscape: m0 = {:.12g}, |M| = {}, V4 {} (margin {:.4g}), {} solves", map.m0, map.M_set.size(),
               map.v4_holds ? "holds" : "fails", map.margin, map.cache_entries);
  return map;
}

const ConcentrationSeries& Experiment::concentrate() {
  if (series_) return *series_;
  if (cfg_.eps_ladder.empty()) fail(ErrorKind::configuration, "eps_ladder is required for concentrate");
  const LandscapeMap& map = landscape();
  Timer timer;
  DomainSpec domain = cfg_.domain;
  domain.delta = map.delta_used;
  ConcentrationOptions co;
  co.eps_ladder = cfg_.eps_ladder;
  co.grid = cfg_.eps_grid;
  co.solve = cfg_.eps_solve;
  co.limit_solve = cfg_.limit.solve;
  co.workers = workers_;
  co.R2 = cfg_.R2;
  series_ = concentration_series(cfg_.pots, domain, cfg_.params, map, co);
  const ConcentrationSeries& s = *series_;

  std::string csv =
      "eps,failed,level,x_tilde_x,x_tilde_y,x_tilde_z,dist_to_M,level_gap,grid_limit_level,profile_error,peak_value,"
      "peak_bound,"
      "truncation_fraction,residual,untruncated_residual,iterations\n";
  json rows = json::array();
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    const auto& r = s.rows[k];
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.eps), r.failed ? 1 : 0,
                       num(r.level), num(r.x_tilde.x), num(r.x_tilde.y), num(r.x_tilde.z), num(r.dist_to_M),
                       num(r.level_gap), num(r.grid_limit_level), num(r.profile_error), num(r.peak_value),
                       num(r.peak_bound), num(r.truncation_fraction),
                       num(r.residual), num(r.untruncated_residual), r.iterations);
    json row = {{"eps", r.eps},
                {"failed", r.failed},
                {"error", r.error},
                {"level", r.level},
                {"x_tilde", vec_json(r.x_tilde)},
                {"dist_to_M", r.dist_to_M},
                {"level_gap", r.level_gap},
                {"grid_limit_level", r.grid_limit_level},
                {"profile_error", r.profile_error},
                {"peak_value", r.peak_value},
                {"peak_bound", r.peak_bound},
                {"truncation_fraction", r.truncation_fraction},
                {"residual", r.residual},
                {"untruncated_residual", r.untruncated_residual},
                {"iterations", r.iterations},
                {"runtime_s", r.runtime_s}};
    if (const auto& sol = s.solutions[k]) {
      row["snapshot"] = fs::relative(snapshot_path(out_, k), out_).generic_string();
      row["x_eps"] = vec_json(sol->x_eps);
      row["fiber_t"] = sol->fiber_t;
      row["hardy_penalty_ratio"] = sol->hardy_penalty_ratio;
      row["both_positive_at_max"] = sol->both_positive_at_max;
      Snapshot snap{sol->fields.grid(), {"u", "v"}, {sol->fields.u, sol->fields.v}};
      if (sol->comparison_state) {
        snap.names.insert(snap.names.end(), {"U", "V"});
        snap.fields.push_back(sol->comparison_state->fields.u);
        snap.fields.push_back(sol->comparison_state->fields.v);
      }
      fs::create_directories(snapshot_path(out_, k).parent_path());
      write_snapshot(snapshot_path(out_, k), snap);
    }
    rows.push_back(row);
  }
  write_text(out_ / "eps_series.csv", csv);
  write_json(out_ / "eps_series.json", {{"rows", rows},
                                           {"R2", s.R2},
                                           {"eps1", s.eps1},
                                           {"P0", vec_json(s.P0)},
                                           {"m0", map.m0},
                                           {"delta", domain.delta}});
  runtimes_["concentrate"] = timer.seconds();
  for (const auto& r : s.rows) {
    if (r.failed) fail(ErrorKind::non_convergence, fmt::format("eps = {} failed: {}", r.eps, r.error));
  }
  return s;
}

ConcentrationSeries Experiment::load_series() {
  const fs::path path = out_ / "eps_series.json";
  if (!fs::exists(path)) fail(ErrorKind::io, "verify needs eps_series.json; run concentrate first");
  const json doc = json::parse(read_text(path));
  ConcentrationSeries s;
  s.R2 = doc.at("R2").get<double>();
  s.eps1 = doc.at("eps1").get<double>();
  s.P0 = vec_from(doc.at("P0"));
  DomainSpec domain = cfg_.domain;
  domain.delta = doc.at("delta").get<double>();
  for (const auto& row : doc.at("rows")) {
    ConcentrationRow r;
    r.eps = row.at("eps").get<double>();
    r.failed = row.at("failed").get<bool>();
    r.level = row.at("level").get<double>();
    r.x_tilde = vec_from(row.at("x_tilde"));
    r.dist_to_M = row.at("dist_to_M").get<double>();
    r.level_gap = row.at("level_gap").get<double>();
    r.grid_limit_level = row.at("grid_limit_level").get<double>();
    r.profile_error = row.at("profile_error").get<double>();
    r.peak_value = row.at("peak_value").get<double>();
    r.peak_bound = row.at("peak_bound").get<double>();
    s.rows.push_back(r);
    if (r.failed || !row.contains("snapshot")) {
      s.solutions.push_back(nullptr);
      s.problems.push_back(nullptr);
      continue;
    }
    const Snapshot snap = read_snapshot(out_ / row.at("snapshot").get<std::string>());
    auto problem = std::make_shared<EpsProblem>(cfg_.pots, domain, cfg_.params, r.eps, snap.grid);
    auto sol = std::make_shared<EpsSolution>(describe_solution(*problem, FieldPair(snap.field("u"), snap.field("v"))));
    if (std::find(snap.names.begin(), snap.names.end(), "U") != snap.names.end()) {
      auto gs = std::make_shared<GroundState>();
      gs->fields = FieldPair(snap.field("U"), snap.field("V"));
      sol->comparison_state = gs;
    }
    s.solutions.push_back(sol);
    s.problems.push_back(problem);
  }
  return s;
}

VerifyOutcome Experiment::verify() {
  Timer timer;
  if (!series_) series_ = load_series();
  const ConcentrationSeries& s = *series_;
  VerifyOutcome v;

  std::vector<std::size_t> ok;
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    if (s.solutions[k]) ok.push_back(k);
  }
  if (ok.empty()) fail(ErrorKind::configuration, "no converged solution to verify");

  json hardy = json::array();
  auto hardy_one = [&](const ScalarField& f, const std::string& label) {
    const double g = grad_norm_sq(f);
    const double rel = g > 0.0 ? hardy_margin(f) / g : 0.0;
    v.hardy_relative_margins.push_back(rel);
    const bool holds = hardy_holds(f);
    v.hardy_ok = v.hardy_ok && holds;
    hardy.push_back({{"field", label}, {"relative_margin", rel}, {"holds", holds}});
  };
  json inner = json::array(), band = json::array();
  std::vector<double> eps, band_max;
  for (std::size_t k : ok) {
    const auto& p = *s.problems[k];
    const auto& sol = *s.solutions[k];
    const std::string tag = fmt::format("eps={}", s.rows[k].eps);
    hardy_one(sol.fields.u, tag + ":u");
    hardy_one(sol.fields.v, tag + ":v");
    if (sol.comparison_state) {
      hardy_one(sol.comparison_state->fields.u, tag + ":U");
      hardy_one(sol.comparison_state->fields.v, tag + ":V");
    }
    // tiers whose region the grid does not reach are reported, not fatal
    try {
      v.inner.push_back(decay_inner(p, sol));
      inner.push_back(fit_json(v.inner.back()));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::domain) throw;
      v.not_covered.push_back(tag + " inner: " + e.what());
    }
    try {
      v.band.push_back(decay_band(p, sol, s.R2));
      band.push_back(fit_json(v.band.back()));
      eps.push_back(s.rows[k].eps);
      band_max.push_back(v.band.back().C);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::domain) throw;
      v.not_covered.push_back(tag + " band: " + e.what());
    }
  }
  const bool ladder = eps.size() >= 2 && eps.size() == ok.size();
  if (ladder) v.band_fit = fit_band_ladder(eps, band_max);

  const std::size_t last = ok.back();
  const auto& p = *s.problems[last];
  const auto& sol = *s.solutions[last];
  json tails = json::array(), envelopes = json::array();
  for (double alpha : cfg_.alphas) {
    if (ladder) {
      try {
        v.tail.push_back(decay_tail(p, sol, s.R2, alpha, v.band_fit));
        tails.push_back(fit_json(v.tail.back()));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::domain) throw;
        v.not_covered.push_back(fmt::format("tail alpha={}: {}", alpha, e.what()));
      }
    } else {
      v.not_covered.push_back(fmt::format("tail alpha={}: needs the band fit over the whole ladder", alpha));
    }
    v.envelope.push_back(rescaled_envelope(p, sol, alpha));
    envelopes.push_back(fit_json(v.envelope.back()));
  }
  v.truncation = truncation_report(p, sol, cfg_.truncation_tol);
  v.truncation_consistent = v.truncation.original_equation_solved;

  v.all_passed = v.hardy_ok && v.truncation_consistent && ladder && v.band_fit.passed && v.not_covered.empty();
  for (const auto* set : {&v.inner, &v.tail, &v.envelope}) {
    for (const auto& f : *set) v.all_passed = v.all_passed && f.passed;
  }

  json band_fit = {{"eps", v.band_fit.eps},
                   {"band_max", v.band_fit.band_max},
                   {"c", v.band_fit.c},
                   {"C", v.band_fit.C},
                   {"r_squared", v.band_fit.r_squared},
                   {"strictly_decreasing", v.band_fit.strictly_decreasing},
                   {"passed", v.band_fit.passed}};
  json doc = {{"hardy", hardy},
              {"hardy_ok", v.hardy_ok},
              {"inner", inner},
              {"band", band},
              {"band_fit", ladder ? band_fit : json(nullptr)},
              {"tail", tails},
              {"envelope", envelopes},
              {"smallest_eps", s.rows[last].eps},
              {"truncation",
               {{"active_fraction", v.truncation.active_fraction},
                {"max_ratio", v.truncation.max_ratio},
                {"outside_nodes", v.truncation.outside_nodes},
                {"untruncated_residual", v.truncation.untruncated_residual},
                {"tolerance", cfg_.truncation_tol},
                {"original_equation_solved", v.truncation.original_equation_solved}}},
              {"not_covered", v.not_covered},
              {"all_passed", v.all_passed},
              {"notes",
               {"inner distances to the boundary of O_eps^{3 delta} are exact for one ball and lower bounds for unions",
                "radial nodes are placed on the positive x axis, so distances to x_eps are radial differences"}}};
  write_json(out_ / "verify_report.json", doc);

  std::size_t pick = 0;
  for (std::size_t i = 0; i < cfg_.alphas.size(); ++i) {
    if (cfg_.alphas[i] == 1.0) pick = i;
  }
  std::string csv = "distance,omega,envelope\n";
  for (const auto& row : decay_profile(p, sol, v.envelope.at(pick))) {
    csv += fmt::format("{},{},{}\n", num(row.distance), num(row.omega), num(row.envelope));
  }
  write_text(out_ / "decay_profile.csv", csv);
  runtimes_["verify"] = timer.seconds();
  spdlog::info("verify: {}", v.all_passed ? "all tiers pass" : "some checks fail; see verify_report.json");
  return v;
}

void Experiment::write_manifest(const std::string& subcommand) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out_)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), out_);
    if (rel == kManifest || rel == kErrorFile) continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json artifacts = json::array();
  for (const auto& rel : files) {
    artifacts.push_back({{"file", rel.generic_string()},
                         {"sha256", sha256_file(out_ / rel)},
                         {"bytes", fs::file_size(out_ / rel)}});
  }
  json runtimes = json::object();
  for (const auto& [k, t] : runtimes_) runtimes[k] = t;
  const json doc = {{"subcommand", subcommand},
                    {"name", cfg_.name},
                    {"seed", cfg_.seed},
                    {"workers", workers_},
                    {"config", cfg_.source},
                    {"config_sha256", sha256_text(cfg_.source)},
                    {"versions",
                     {{"cnls", CNLS_VERSION},
                      {"compiler", __VERSION__},
                      {"fftw", std::string(fftw_version)},
                      {"openssl", OPENSSL_VERSION_TEXT},
                      {"spdlog", fmt::format("{}.{}.{}", SPDLOG_VER_MAJOR, SPDLOG_VER_MINOR, SPDLOG_VER_PATCH)},
                      {"fmt", FMT_VERSION}}},
                    {"runtimes_s", runtimes},
                    {"artifacts", artifacts}};
  write_json(out_ / kManifest, doc);
}

int run(const ExperimentConfig& cfg, const RunRequest& request) {
  const fs::path out = request.out.empty() ? cfg.output : request.out;
  try {
    fs::create_directories(out);
    fs::remove(out / kErrorFile);
    Experiment ex(cfg, out, request.workers);
    switch (request.command) {
      case Subcommand::oracle: ex.oracle(); break;
      case Subcommand::ground_state: {
        const auto aP = request.aP ? request.aP : cfg.gs_aP;
        const auto bP = request.bP ? request.bP : cfg.gs_bP;
        const bool scalar = request.scalar.value_or(cfg.gs_scalar);
        if (!aP || (!bP && !scalar)) fail(ErrorKind::configuration, "ground-state needs aP and bP");
        ex.ground_state(*aP, bP.value_or(*aP), scalar);
        break;
      }
      case Subcommand::landscape: ex.landscape(); break;
      case Subcommand::concentrate: ex.concentrate(); break;
      case Subcommand::verify: ex.verify(); break;
      case Subcommand::all: {
        ex.oracle();
        ex.landscape();
        ex.concentrate();
        ex.verify();
        break;
      }
    }
    ex.write_manifest(to_string(request.command));
    return 0;
  } catch (const Error& e) {
    RunRequest r = request;
    r.out = out;
    return report_failure(r, e);
  } catch (const std::exception& e) {
    spdlog::error("internal: {}", e.what());
    try {
      write_json(out / kErrorFile, {{"subcommand", to_string(request.command)},
                                    {"kind", "internal"},
                                    {"message", e.what()},
                                    {"exit_code", 1}});
    } catch (const std::exception&) {
    }
    return 1;
  }
}

int report_failure(const RunRequest& request, const Error& e) {
  spdlog::error("{}: {}", to_string(e.kind()), e.what());
  const int code = exit_code_for(e.kind());
  try {
    write_json(request.out / kErrorFile, {{"subcommand", to_string(request.command)},
                                          {"kind", std::string(to_string(e.kind()))},
                                          {"message", e.what()},
                                          {"exit_code", code}});
  } catch (const std::exception&) {
  }
  return code;
}

}  // namespace cnls
