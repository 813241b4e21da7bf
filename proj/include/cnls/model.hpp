#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cnls/grid.hpp"

namespace cnls {

/// Self-interaction strengths mu1, mu2 > 0 and the coupling beta.
struct CouplingParams {
  double mu1 = 1.0;
  double mu2 = 1.0;
  double beta = 0.0;

  void validate() const;
};

enum class PotentialFamily { constant, radial_well, two_well, vanishing_point };

std::string to_string(PotentialFamily f);
PotentialFamily potential_family_from_string(const std::string& name);

/// Gaussian dip of the given depth centred at `center`.
struct Well {
  Vec3 center;
  double depth = 0.0;
};

/// One coefficient function of the system.
///
///   a(x) = (top - sum_k depth_k exp(-|x - z_k|^2 / width^2)) * T(|x|) * Z(x) + offset
///
/// T(r) = 1 for r <= tail_radius and T(r) = R^2 log R / (r^2 log r) beyond, so
/// a(x) |x|^2 log|x| tends to a positive constant. Z(x) = |x-z0|^2/(1+|x-z0|^2)
/// for the vanishing_point family and 1 otherwise. The constant family is
/// a(x) = top.
struct ComponentPotential {
  PotentialFamily family = PotentialFamily::constant;
  double top = 1.0;
  std::vector<Well> wells;
  double width = 1.0;
  double tail_radius = 0.0;
  double offset = 0.0;
  std::optional<Vec3> zero_point;

  double operator()(const Vec3& x) const;
  bool radial_about_origin() const;
  void validate() const;
};

struct PotentialSpec {
  ComponentPotential a;
  ComponentPotential b;

  std::pair<double, double> operator()(const Vec3& x) const { return {a(x), b(x)}; }
  bool radial_about_origin() const { return a.radial_about_origin() && b.radial_about_origin(); }
  /// True when a - b is the same constant everywhere (only offsets differ).
  std::optional<double> constant_difference() const;
};

struct Ball {
  Vec3 center;
  double radius = 1.0;

  bool contains(const Vec3& x) const { return distance(x, center) < radius; }
};

/// Bounded open set: a ball or an axis-aligned box.
struct Shape {
  enum class Kind { ball, box };
  Kind kind = Kind::ball;
  Vec3 center;
  double radius = 1.0;  // ball
  Vec3 lo, hi;          // box

  bool contains_closure(const Vec3& x) const;
  /// Sample points of the closure on a lattice of the given spacing, including
  /// the boundary.
  std::vector<Vec3> sample_closure(double spacing) const;
  double bounding_radius() const;
};

/// Lambda, O (union of balls), delta and the radii rho0 < rho1 with
/// B(0, rho0) inside O inside B(0, rho1).
struct DomainSpec {
  Shape lambda;
  std::vector<Ball> O;
  double delta = 0.0;  // 0 selects rho0 / 8
  double rho0 = 0.0;
  double rho1 = 0.0;

  /// Fills rho0, rho1 and the default delta; checks 0 in O and O inside Lambda.
  void finalize();
  bool in_O(const Vec3& x) const;
  /// Distance from x to O (0 inside).
  double dist_to_O(const Vec3& x) const;
  /// Distance from x to the complement of O (0 outside).
  double dist_to_complement(const Vec3& x) const;
  /// Membership in the closed tube O^s = {dist(x, O) <= s}.
  bool in_tube(const Vec3& x, double s) const { return dist_to_O(x) <= s; }
  /// Points on the boundary of O with roughly the given arc spacing.
  std::vector<Vec3> boundary_samples(double spacing) const;
};

/// eps and its domain; O_eps = {x : eps x in O}.
struct TruncationParams {
  double eps = 0.1;
  DomainSpec domain;

  bool in_O_eps(const Vec3& x) const { return domain.in_O(eps * x); }
};

/// Admissibility sampling summary for the active potentials on Lambda.
struct Admissibility {
  double a0 = 0.0;               // inf of a over the Lambda sample
  double b0 = 0.0;
  double a_min_global = 0.0;     // inf over all samples (V1 needs >= 0)
  double b_min_global = 0.0;
  double tail_liminf_a = 0.0;    // sampled liminf of a |x|^2 log|x| (V2)
  double tail_liminf_b = 0.0;
  double max_ratio = 0.0;        // max of max{a/b, b/a} over the Lambda sample
  double sample_spacing = 0.0;
  double tube_min_a = 0.0;       // inf over O^{5 delta} of a
  double tube_min_b = 0.0;
  bool v1 = false;
  bool v2 = false;
  bool v3 = false;
  bool tube_ok = false;          // inf over O^{5 delta} >= a0/2, b0/2
};

/// Samples V1-V3 and the tube condition. Does not throw on failure.
Admissibility sample_admissibility(const PotentialSpec& pots, const DomainSpec& domain, double spacing);

/// beta0 = max{mu1, mu2} * max over the Lambda sample of max{a/b, b/a}.
/// Throws an admissibility error when a or b vanishes on the sample.
double beta0(const CouplingParams& params, const PotentialSpec& pots, const Shape& lambda, double spacing);

/// F(s, t) = (mu1 s^4 + 2 beta s^2 t^2 + mu2 t^4) / 4.
inline double F(double s, double t, const CouplingParams& p) {
  const double s2 = s * s, t2 = t * t;
  return 0.25 * (p.mu1 * s2 * s2 + 2.0 * p.beta * s2 * t2 + p.mu2 * t2 * t2);
}

/// (dF/ds, dF/dt).
inline std::array<double, 2> grad_F(double s, double t, const CouplingParams& p) {
  const double s2 = s * s, t2 = t * t;
  return {p.mu1 * s2 * s + p.beta * s * t2, p.mu2 * t2 * t + p.beta * s2 * t};
}

/// gamma_eps(t) = eps^2 / (t^2 log t), defined for t >= rho0 / eps.
double gamma_eps(double t, const TruncationParams& trunc);
/// Same formula without the domain check; t > 1.
inline double gamma_raw(double t, double eps) { return eps * eps / (t * t * std::log(t)); }

/// Truncated nonlinearity. Inside O_eps, or where F <= gamma^2/4, G = F;
/// otherwise G = gamma sqrt(F) - gamma^2 / 4. s, t are the clamped u+, v+.
double G_eps(const Vec3& x, double s, double t, const TruncationParams& trunc, const CouplingParams& p);
std::array<double, 2> grad_G_eps(const Vec3& x, double s, double t, const TruncationParams& trunc,
                                 const CouplingParams& p);

/// Same as above with the O_eps membership and gamma value precomputed
/// (gamma unused when inside).
inline double G_local(bool inside, double gamma, double s, double t, const CouplingParams& p) {
  const double f = F(s, t, p);
  if (inside || 4.0 * f <= gamma * gamma) return f;
  return gamma * std::sqrt(f) - 0.25 * gamma * gamma;
}
inline std::array<double, 2> grad_G_local(bool inside, double gamma, double s, double t, const CouplingParams& p) {
  const double f = F(s, t, p);
  auto g = grad_F(s, t, p);
  if (inside || 4.0 * f <= gamma * gamma) return g;
  const double k = gamma / (2.0 * std::sqrt(f));
  return {k * g[0], k * g[1]};
}

/// eps1 solving sqrt(beta) eps^2 / log(rho0 / eps) = 1/8 on (0, rho0 / e).
/// Returns rho0 / e when the map stays below 1/8 on the whole interval.
double eps1(const CouplingParams& params, double rho0);

/// Tail radius R1 >= rho1: a, b >= c / (|x|^2 log|x|) for |x| >= R1 with c
/// half the sampled liminf of a |x|^2 log|x| (and of b).
struct TailRadius {
  double R1 = 0.0;
  double c = 0.0;
};
TailRadius tail_radius(const PotentialSpec& pots, const DomainSpec& domain);

/// Rays used for the V2 and R1 sampling (unit vectors).
std::vector<Vec3> sampling_rays();

}  // namespace cnls
