#include "cnls/landscape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cnls/error.hpp"

namespace cnls {

struct EnergyCache::State {
  mutable std::mutex mutex;
  std::map<Key, double> values;
};

std::shared_ptr<EnergyCache::State> EnergyCache::make_state() { return std::make_shared<State>(); }

EnergyCache::Key EnergyCache::key(double aP, double bP) {
  return {std::llround(aP * 1e12), std::llround(bP * 1e12)};
}

std::optional<double> EnergyCache::find(double aP, double bP) const {
  std::lock_guard lock(state_->mutex);
  const auto it = state_->values.find(key(aP, bP));
  if (it == state_->values.end()) return std::nullopt;
  return it->second;
}

double EnergyCache::insert(double aP, double bP, double m) {
  std::lock_guard lock(state_->mutex);
  return state_->values.emplace(key(aP, bP), m).first->second;
}

std::size_t EnergyCache::size() const {
  std::lock_guard lock(state_->mutex);
  return state_->values.size();
}

GridPtr LimitGridSpec::grid_for(double aP, double bP) const {
  const double lo = std::min(aP, bP);
  if (!(lo > 0.0)) fail(ErrorKind::admissibility, fmt::format("limit problem needs aP, bP > 0 (got {}, {})", aP, bP));
  return make_grid(RadialGrid(extent / std::sqrt(lo), n));
}

namespace {

struct LatticePoint {
  long i, j, k;
  Vec3 P;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

LandscapeMap scan_m(const DomainSpec& domain, const PotentialSpec& pots, const CouplingParams& params,
                    const ScanOptions& options) {
  params.validate();
  const double spacing = options.spacing > 0.0 ? options.spacing : domain.rho0 / 16.0;
  if (!(spacing > 0.0)) fail(ErrorKind::configuration, "landscape spacing must be positive");
  if (options.beta0 && !(params.beta > *options.beta0)) {
    fail(ErrorKind::admissibility, fmt::format("beta = {} must exceed beta0 = {}", params.beta, *options.beta0));
  }

  LandscapeMap map;
  map.spacing = spacing;

  // lattice through the origin, restricted to O
  std::vector<LatticePoint> lattice;
  double reach = 0.0;
  for (const auto& ball : domain.O) reach = std::max(reach, ball.center.norm() + ball.radius);
  const long K = static_cast<long>(std::ceil(reach / spacing));
  for (long i = -K; i <= K; ++i) {
    for (long j = -K; j <= K; ++j) {
      for (long k = -K; k <= K; ++k) {
        const Vec3 P{double(i) * spacing, double(j) * spacing, double(k) * spacing};
        if (domain.in_O(P)) lattice.push_back({i, j, k, P});
      }
    }
  }
  const auto boundary = domain.boundary_samples(spacing);

  auto sample_at = [&](const Vec3& P) {
    LandscapeSample s;
    s.P = P;
    std::tie(s.aP, s.bP) = pots(P);
    return s;
  };
  map.samples.reserve(lattice.size());
  for (const auto& lp : lattice) map.samples.push_back(sample_at(lp.P));
  map.boundary.reserve(boundary.size());
  for (const auto& P : boundary) map.boundary.push_back(sample_at(P));

  // distinct coefficient pairs, each solved once
  std::map<EnergyCache::Key, const LandscapeSample*> unique;
  for (const auto* set : {&map.samples, &map.boundary}) {
    for (const auto& s : *set) unique.emplace(EnergyCache::key(s.aP, s.bP), &s);
  }
  std::vector<const LandscapeSample*> jobs;
  jobs.reserve(unique.size());
  for (const auto& [k, s] : unique) jobs.push_back(s);

  EnergyCache cache;
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::optional<Error> failure;
  auto work = [&]() {
    for (std::size_t idx = next++; idx < jobs.size(); idx = next++) {
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const LandscapeSample& s = *jobs[idx];
      try {
        LimitProblem lp;
        lp.aP = s.aP;
        lp.bP = s.bP;
        lp.params = params;
        lp.grid = options.limit.grid_for(s.aP, s.bP);
        lp.beta0 = options.beta0;
        const GroundState gs = solve_limit(lp, false, options.limit.solve);
        cache.insert(s.aP, s.bP, gs.energy);
      } catch (const Error& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = Error(e.kind(), fmt::format("limit solve at P = ({:.6g}, {:.6g}, {:.6g}) failed: {}", s.P.x,
                                                s.P.y, s.P.z, e.what()));
        }
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) throw *failure;

  for (auto* set : {&map.samples, &map.boundary}) {
    for (auto& s : *set) s.m = *cache.find(s.aP, s.bP);
  }
  map.cache_entries = cache.size();
  if (map.samples.empty()) fail(ErrorKind::configuration, "no lattice sample lies in O");

  map.m0 = std::numeric_limits<double>::infinity();
  double m_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : map.samples) {
    map.m0 = std::min(map.m0, s.m);
    m_max = std::max(m_max, s.m);
  }
  map.flat = m_max - map.m0 <= 1e-10 * map.m0;
  map.M_set = find_M(map);
  if (map.flat) spdlog::warn("m is constant over O: every interior sample minimises");

  // continuity proxy over lattice neighbours
  std::map<std::tuple<long, long, long>, double> by_index;
  for (std::size_t n = 0; n < lattice.size(); ++n) {
    by_index[{lattice[n].i, lattice[n].j, lattice[n].k}] = map.samples[n].m;
  }
  std::vector<double> variation;
  for (std::size_t n = 0; n < lattice.size(); ++n) {
    const auto& lp = lattice[n];
    for (const auto& nb : {std::tuple{lp.i + 1, lp.j, lp.k}, std::tuple{lp.i, lp.j + 1, lp.k},
                           std::tuple{lp.i, lp.j, lp.k + 1}}) {
      const auto it = by_index.find(nb);
      if (it != by_index.end()) variation.push_back(std::abs(it->second - map.samples[n].m) / spacing);
    }
  }
  if (!variation.empty()) {
    map.max_adjacent_variation = *std::max_element(variation.begin(), variation.end());
    map.median_adjacent_variation = median(variation);
  }
  map.continuity_ok =
      map.max_adjacent_variation <= 10.0 * map.median_adjacent_variation + 1e-9 * map.m0 / spacing;
  if (!map.continuity_ok) {
    spdlog::warn("landscape variation spike: max {:.3g} against median {:.3g}", map.max_adjacent_variation,
                 map.median_adjacent_variation);
  }

  map.coefficient_shift = pots.constant_difference();
  if (map.coefficient_shift) {
    double inf_in = std::numeric_limits<double>::infinity();
    double inf_bd = std::numeric_limits<double>::infinity();
    for (const auto& s : map.samples) inf_in = std::min(inf_in, s.aP);
    for (const auto& s : map.boundary) inf_bd = std::min(inf_bd, s.aP);
    map.shift_condition = inf_in < inf_bd;
  }
  const V4Verdict v4 = check_V4(map);
  map.v4_holds = v4.holds;
  map.margin = v4.margin;
  map.shift_consistent = v4.shift_consistent;
  if (!map.shift_consistent) spdlog::error("sufficient condition holds but the sampled (V4) check fails");

  // delta must keep O^{5 delta} around every minimiser inside O
  map.delta_used = domain.delta;
  double clearance = std::numeric_limits<double>::infinity();
  if (map.flat) {
    // every sample minimises; only the seed point used downstream matters
    const auto seed = std::min_element(map.M_set.begin(), map.M_set.end(),
                                       [](const Vec3& l, const Vec3& r) { return l.norm() < r.norm(); });
    clearance = domain.dist_to_complement(*seed);
  } else {
    for (const auto& P : map.M_set) clearance = std::min(clearance, domain.dist_to_complement(P));
  }
  while (map.delta_used > 0.0 && clearance < 5.0 * map.delta_used) {
    map.delta_used *= 0.5;
    map.delta_shrunk = true;
  }
  if (map.delta_shrunk) {
    spdlog::warn("delta shrunk from {:.4g} to {:.4g}: minimisers lie {:.4g} from the boundary of O", domain.delta,
                 map.delta_used, clearance);
  }

  return map;
}

std::vector<Vec3> find_M(const LandscapeMap& map) {
  std::vector<Vec3> out;
  for (const auto& s : map.samples) {
    if (s.m <= map.m0 * (1.0 + 1e-6)) out.push_back(s.P);
  }
  return out;
}

V4Verdict check_V4(const LandscapeMap& map) {
  V4Verdict v;
  double bd = std::numeric_limits<double>::infinity();
  for (const auto& s : map.boundary) bd = std::min(bd, s.m);
  if (map.boundary.empty()) return v;
  v.margin = bd - map.m0;
  v.holds = map.m0 < bd;
  v.shift_condition = map.shift_condition;
  v.shift_consistent = !map.shift_condition || v.holds;
  return v;
}

}  // namespace cnls
