#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "cnls/limit_solver.hpp"
#include "cnls/model.hpp"

namespace cnls {

struct LandscapeSample {
  Vec3 P;
  double aP = 0.0;
  double bP = 0.0;
  double m = 0.0;
};

/// Limit-solve settings shared by every landscape sample.
struct LimitGridSpec {
  std::size_t n = 2048;
  double extent = 16.0;  // r_max = extent / sqrt(min(aP, bP))
  SolveOptions solve;

  GridPtr grid_for(double aP, double bP) const;
};

struct LandscapeMap {
  std::vector<LandscapeSample> samples;  // interior lattice samples of O
  std::vector<LandscapeSample> boundary; // samples on the boundary of O
  double spacing = 0.0;
  double m0 = 0.0;
  std::vector<Vec3> M_set;
  bool v4_holds = false;
  double margin = 0.0;
  bool flat = false;                  // m constant over the interior
  std::size_t cache_entries = 0;      // distinct (aP, bP) solves
  double max_adjacent_variation = 0.0;
  double median_adjacent_variation = 0.0;
  bool continuity_ok = true;
  double delta_used = 0.0;            // delta after the 5 delta check
  bool delta_shrunk = false;
  std::optional<double> coefficient_shift;  // a - b when it is constant
  bool shift_condition = false;       // inf_O a < inf_{boundary} a
  bool shift_consistent = true;       // condition implies v4_holds
};

struct ScanOptions {
  double spacing = 0.0;  // 0 selects rho0 / 16
  std::size_t workers = 1;
  LimitGridSpec limit;
  std::optional<double> beta0;
};

/// Samples m(P) on a lattice of O through the origin plus the boundary of O,
/// solving one limit problem per distinct (a(P), b(P)) quantised to 1e-12.
LandscapeMap scan_m(const DomainSpec& domain, const PotentialSpec& pots, const CouplingParams& params,
                    const ScanOptions& options);

/// Interior samples with m <= m0 (1 + 1e-6).
std::vector<Vec3> find_M(const LandscapeMap& map);

struct V4Verdict {
  bool holds = false;
  double margin = 0.0;
  bool shift_condition = false;
  bool shift_consistent = true;
};
V4Verdict check_V4(const LandscapeMap& map);

/// Thread-safe cache of m keyed by (aP, bP) quantised to 1e-12; the first
/// stored value wins.
class EnergyCache {
 public:
  struct Key {
    long long a;
    long long b;
    friend bool operator<(const Key& l, const Key& r) { return l.a != r.a ? l.a < r.a : l.b < r.b; }
  };
  static Key key(double aP, double bP);
  std::optional<double> find(double aP, double bP) const;
  /// Stores m unless present; returns the stored value.
  double insert(double aP, double bP, double m);
  std::size_t size() const;

 private:
  struct State;
  std::shared_ptr<State> state_ = make_state();
  static std::shared_ptr<State> make_state();
};

}  // namespace cnls
