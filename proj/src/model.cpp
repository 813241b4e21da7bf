#include "cnls/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "cnls/error.hpp"

namespace cnls {

namespace {

constexpr double tail_r_lo = 1e3;
constexpr double tail_r_hi = 1e4;

// Fibonacci lattice on the sphere |x - c| = r.
std::vector<Vec3> sphere_points(Vec3 c, double r, std::size_t count) {
  std::vector<Vec3> pts;
  pts.reserve(count);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (double(i) + 0.5) / double(count);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * double(i);
    pts.push_back(c + r * Vec3{rho * std::cos(phi), rho * std::sin(phi), z});
  }
  return pts;
}

std::size_t sphere_count(double r, double spacing) {
  const double area = 4.0 * std::numbers::pi * r * r;
  return std::max<std::size_t>(12, static_cast<std::size_t>(std::ceil(area / (spacing * spacing))));
}

double tail_quotient(double value, double r) { return value * r * r * std::log(r); }

}  // namespace

void CouplingParams::validate() const {
  if (!(mu1 > 0.0) || !(mu2 > 0.0)) fail(ErrorKind::configuration, "mu1 and mu2 must be positive");
  if (!std::isfinite(beta)) fail(ErrorKind::configuration, "beta must be finite");
}

std::string to_string(PotentialFamily f) {
  switch (f) {
    case PotentialFamily::constant: return "constant";
    case PotentialFamily::radial_well: return "radial_well";
    case PotentialFamily::two_well: return "two_well";
    case PotentialFamily::vanishing_point: return "vanishing_point";
  }
  return "unknown";
}

PotentialFamily potential_family_from_string(const std::string& name) {
  if (name == "constant") return PotentialFamily::constant;
  if (name == "radial_well") return PotentialFamily::radial_well;
  if (name == "two_well") return PotentialFamily::two_well;
  if (name == "vanishing_point") return PotentialFamily::vanishing_point;
  fail(ErrorKind::configuration, "unknown potential family '" + name + "'");
}

double ComponentPotential::operator()(const Vec3& x) const {
  if (family == PotentialFamily::constant) return top + offset;
  double core = top;
  const double inv_w2 = 1.0 / (width * width);
  for (const auto& w : wells) {
    const Vec3 d = x - w.center;
    core -= w.depth * std::exp(-(d.x * d.x + d.y * d.y + d.z * d.z) * inv_w2);
  }
  const double r = x.norm();
  if (tail_radius > 0.0 && r > tail_radius) {
    const double R = tail_radius;
    core *= (R * R * std::log(R)) / (r * r * std::log(r));
  }
  if (zero_point) {
    const Vec3 d = x - *zero_point;
    const double q = d.x * d.x + d.y * d.y + d.z * d.z;
    core *= q / (1.0 + q);
  }
  return core + offset;
}

bool ComponentPotential::radial_about_origin() const {
  if (family == PotentialFamily::constant) return true;
  if (zero_point) return false;
  return std::all_of(wells.begin(), wells.end(), [](const Well& w) { return w.center == Vec3{}; });
}

void ComponentPotential::validate() const {
  if (!std::isfinite(top) || !std::isfinite(offset)) fail(ErrorKind::configuration, "potential levels must be finite");
  if (family == PotentialFamily::constant) return;
  if (!(width > 0.0)) fail(ErrorKind::configuration, "potential well width must be positive");
  if (!(tail_radius > 1.0)) fail(ErrorKind::configuration, "potential tail_radius must exceed 1");
  if (!(top > 0.0)) fail(ErrorKind::configuration, "potential top level must be positive");
  for (const auto& w : wells) {
    if (!(w.depth >= 0.0) || !std::isfinite(w.depth)) fail(ErrorKind::configuration, "well depth must be >= 0");
  }
  if (family == PotentialFamily::radial_well && wells.size() != 1) {
    fail(ErrorKind::configuration, "radial_well takes exactly one well");
  }
  if (family == PotentialFamily::two_well && wells.size() != 2) {
    fail(ErrorKind::configuration, "two_well takes exactly two wells");
  }
  if (family == PotentialFamily::vanishing_point && !zero_point) {
    fail(ErrorKind::configuration, "vanishing_point needs a zero point");
  }
  if (family != PotentialFamily::vanishing_point && zero_point) {
    fail(ErrorKind::configuration, "zero point is only valid for the vanishing_point family");
  }
}

std::optional<double> PotentialSpec::constant_difference() const {
  ComponentPotential a_shift = a;
  a_shift.offset = b.offset;
  const bool same = a_shift.family == b.family && a_shift.top == b.top && a_shift.width == b.width &&
                    a_shift.tail_radius == b.tail_radius && a_shift.zero_point == b.zero_point &&
                    a_shift.wells.size() == b.wells.size() &&
                    std::equal(a_shift.wells.begin(), a_shift.wells.end(), b.wells.begin(),
                               [](const Well& l, const Well& r) { return l.center == r.center && l.depth == r.depth; });
  if (!same) return std::nullopt;
  return a.offset - b.offset;
}

bool Shape::contains_closure(const Vec3& x) const {
  if (kind == Kind::ball) return distance(x, center) <= radius;
  return x.x >= lo.x && x.x <= hi.x && x.y >= lo.y && x.y <= hi.y && x.z >= lo.z && x.z <= hi.z;
}

double Shape::bounding_radius() const {
  if (kind == Kind::ball) return center.norm() + radius;
  double m = 0.0;
  for (double x : {lo.x, hi.x}) {
    for (double y : {lo.y, hi.y}) {
      for (double z : {lo.z, hi.z}) m = std::max(m, Vec3{x, y, z}.norm());
    }
  }
  return m;
}

std::vector<Vec3> Shape::sample_closure(double spacing) const {
  if (!(spacing > 0.0)) fail(ErrorKind::configuration, "sampling spacing must be positive");
  std::vector<Vec3> pts;
  if (kind == Kind::ball) {
    const int m = static_cast<int>(std::floor(radius / spacing));
    for (int i = -m; i <= m; ++i) {
      for (int j = -m; j <= m; ++j) {
        for (int k = -m; k <= m; ++k) {
          const Vec3 p = center + spacing * Vec3{double(i), double(j), double(k)};
          if (contains_closure(p)) pts.push_back(p);
        }
      }
    }
    auto shell = sphere_points(center, radius, sphere_count(radius, spacing));
    pts.insert(pts.end(), shell.begin(), shell.end());
    return pts;
  }
  auto axis = [spacing](double a, double b) {
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / spacing)));
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) v[i] = a + (b - a) * double(i) / double(n);
    return v;
  };
  const auto xs = axis(lo.x, hi.x), ys = axis(lo.y, hi.y), zs = axis(lo.z, hi.z);
  for (double x : xs) {
    for (double y : ys) {
      for (double z : zs) pts.push_back({x, y, z});
    }
  }
  return pts;
}

void DomainSpec::finalize() {
  if (O.empty()) fail(ErrorKind::configuration, "domain O needs at least one ball");
  for (const auto& b : O) {
    if (!(b.radius > 0.0)) fail(ErrorKind::configuration, "ball radius must be positive");
  }
  if (lambda.kind == Shape::Kind::ball && !(lambda.radius > 0.0)) {
    fail(ErrorKind::configuration, "Lambda radius must be positive");
  }
  if (lambda.kind == Shape::Kind::box &&
      !(lambda.lo.x < lambda.hi.x && lambda.lo.y < lambda.hi.y && lambda.lo.z < lambda.hi.z)) {
    fail(ErrorKind::configuration, "Lambda box needs lo < hi on every axis");
  }
  // largest origin-centred ball certified inside a single ball of O
  rho0 = 0.0;
  rho1 = 0.0;
  for (const auto& b : O) {
    rho0 = std::max(rho0, b.radius - b.center.norm());
    rho1 = std::max(rho1, b.center.norm() + b.radius);
  }
  if (!(rho0 > 0.0)) fail(ErrorKind::configuration, "the origin must lie inside O");
  if (!(rho1 > rho0)) rho1 = rho0 * (1.0 + 1e-12);
  if (delta == 0.0) delta = rho0 / 8.0;
  if (!(delta > 0.0) || !(delta < rho0)) fail(ErrorKind::configuration, "delta must lie in (0, rho0)");
  for (const auto& p : boundary_samples(rho0 / 8.0)) {
    if (!lambda.contains_closure(p)) fail(ErrorKind::configuration, "O must be contained in Lambda");
  }
}

bool DomainSpec::in_O(const Vec3& x) const {
  return std::any_of(O.begin(), O.end(), [&](const Ball& b) { return b.contains(x); });
}

double DomainSpec::dist_to_O(const Vec3& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& b : O) d = std::min(d, distance(x, b.center) - b.radius);
  return std::max(d, 0.0);
}

double DomainSpec::dist_to_complement(const Vec3& x) const {
  // exact for a single ball, a lower bound for unions
  double d = 0.0;
  for (const auto& b : O) d = std::max(d, b.radius - distance(x, b.center));
  return d;
}

std::vector<Vec3> DomainSpec::boundary_samples(double spacing) const {
  std::vector<Vec3> out;
  for (std::size_t k = 0; k < O.size(); ++k) {
    for (const auto& p : sphere_points(O[k].center, O[k].radius, sphere_count(O[k].radius, spacing))) {
      bool covered = false;
      for (std::size_t j = 0; j < O.size() && !covered; ++j) {
        covered = j != k && O[j].contains(p);
      }
      if (!covered) out.push_back(p);
    }
  }
  return out;
}

std::vector<Vec3> sampling_rays() {
  std::vector<Vec3> rays;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      for (int k = -1; k <= 1; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        const Vec3 v{double(i), double(j), double(k)};
        rays.push_back((1.0 / v.norm()) * v);
      }
    }
  }
  return rays;
}

Admissibility sample_admissibility(const PotentialSpec& pots, const DomainSpec& domain, double spacing) {
  Admissibility adm;
  adm.sample_spacing = spacing;
  constexpr double inf = std::numeric_limits<double>::infinity();
  adm.a0 = adm.b0 = inf;
  adm.max_ratio = 0.0;
  for (const auto& p : domain.lambda.sample_closure(spacing)) {
    const auto [a, b] = pots(p);
    adm.a0 = std::min(adm.a0, a);
    adm.b0 = std::min(adm.b0, b);
    if (a > 0.0 && b > 0.0) adm.max_ratio = std::max(adm.max_ratio, std::max(a / b, b / a));
  }
  adm.v3 = adm.a0 > 0.0 && adm.b0 > 0.0;
  if (!adm.v3) adm.max_ratio = inf;

  // V1 sampled on Lambda and on rays out to the tail window
  adm.a_min_global = adm.a0;
  adm.b_min_global = adm.b0;
  adm.tail_liminf_a = adm.tail_liminf_b = inf;
  const double r_start = std::max(domain.lambda.bounding_radius(), 1.0);
  for (const auto& ray : sampling_rays()) {
    for (double r = r_start; r <= tail_r_hi; r *= 1.01) {
      const auto [a, b] = pots(r * ray);
      adm.a_min_global = std::min(adm.a_min_global, a);
      adm.b_min_global = std::min(adm.b_min_global, b);
      if (r >= tail_r_lo) {
        adm.tail_liminf_a = std::min(adm.tail_liminf_a, tail_quotient(a, r));
        adm.tail_liminf_b = std::min(adm.tail_liminf_b, tail_quotient(b, r));
      }
    }
  }
  adm.v1 = adm.a_min_global >= 0.0 && adm.b_min_global >= 0.0;
  adm.v2 = adm.tail_liminf_a > 0.0 && adm.tail_liminf_b > 0.0;

  // inf over the closed tube O^{5 delta}, sampled on a lattice around O
  adm.tube_min_a = adm.tube_min_b = inf;
  const double reach = domain.rho1 + 5.0 * domain.delta;
  Shape box;
  box.kind = Shape::Kind::box;
  box.lo = {-reach, -reach, -reach};
  box.hi = {reach, reach, reach};
  for (const auto& p : box.sample_closure(spacing)) {
    if (!domain.in_tube(p, 5.0 * domain.delta)) continue;
    const auto [a, b] = pots(p);
    adm.tube_min_a = std::min(adm.tube_min_a, a);
    adm.tube_min_b = std::min(adm.tube_min_b, b);
  }
  for (const auto& p : domain.boundary_samples(spacing)) {
    const Vec3 dir = p.norm() > 0.0 ? (1.0 / p.norm()) * p : Vec3{1.0, 0.0, 0.0};
    const Vec3 q = p + 5.0 * domain.delta * dir;
    if (!domain.in_tube(q, 5.0 * domain.delta * (1.0 + 1e-12))) continue;
    const auto [a, b] = pots(q);
    adm.tube_min_a = std::min(adm.tube_min_a, a);
    adm.tube_min_b = std::min(adm.tube_min_b, b);
  }
  adm.tube_ok = adm.v3 && adm.tube_min_a >= 0.5 * adm.a0 && adm.tube_min_b >= 0.5 * adm.b0;
  return adm;
}

double beta0(const CouplingParams& params, const PotentialSpec& pots, const Shape& lambda, double spacing) {
  double ratio = 0.0;
  for (const auto& p : lambda.sample_closure(spacing)) {
    const auto [a, b] = pots(p);
    if (!(a > 0.0) || !(b > 0.0)) {
      fail(ErrorKind::admissibility,
           fmt::format("V3 violated: a = {:.6g}, b = {:.6g} at ({:.4g}, {:.4g}, {:.4g})", a, b, p.x, p.y, p.z));
    }
    ratio = std::max(ratio, std::max(a / b, b / a));
  }
  return std::max(params.mu1, params.mu2) * ratio;
}

double gamma_eps(double t, const TruncationParams& trunc) {
  const double lower = trunc.domain.rho0 / trunc.eps;
  if (!(t >= lower * (1.0 - 1e-12)) || !(t > 1.0)) {
    fail(ErrorKind::domain, fmt::format("gamma_eps undefined at t = {:.6g} (needs t >= {:.6g} and t > 1)", t, lower));
  }
  return gamma_raw(t, trunc.eps);
}

double G_eps(const Vec3& x, double s, double t, const TruncationParams& trunc, const CouplingParams& p) {
  const bool inside = trunc.in_O_eps(x);
  const double gamma = inside ? 0.0 : gamma_eps(x.norm(), trunc);
  return G_local(inside, gamma, s, t, p);
}

std::array<double, 2> grad_G_eps(const Vec3& x, double s, double t, const TruncationParams& trunc,
                                 const CouplingParams& p) {
  const bool inside = trunc.in_O_eps(x);
  const double gamma = inside ? 0.0 : gamma_eps(x.norm(), trunc);
  return grad_G_local(inside, gamma, s, t, p);
}

double eps1(const CouplingParams& params, double rho0) {
  if (!(params.beta > 0.0)) fail(ErrorKind::configuration, "eps1 needs beta > 0");
  const double sb = std::sqrt(params.beta);
  auto g = [&](double e) { return sb * e * e / std::log(rho0 / e); };
  double lo = 0.0;
  double hi = rho0 / std::numbers::e;
  if (g(hi) <= 0.125) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.125 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TailRadius tail_radius(const PotentialSpec& pots, const DomainSpec& domain) {
  const auto rays = sampling_rays();
  const double r_start = std::max(domain.rho1, 1.0 + 1e-9);
  double liminf = std::numeric_limits<double>::infinity();
  double at_start = std::numeric_limits<double>::infinity();
  for (const auto& ray : rays) {
    for (double r = tail_r_lo; r <= tail_r_hi; r *= 1.01) {
      const auto [a, b] = pots(r * ray);
      liminf = std::min(liminf, tail_quotient(std::min(a, b), r));
    }
    const auto [a, b] = pots(r_start * ray);
    at_start = std::min(at_start, tail_quotient(std::min(a, b), r_start));
  }
  if (!(liminf > 0.0)) fail(ErrorKind::admissibility, "V2 violated: a |x|^2 log|x| has no positive floor");
  TailRadius out;
  out.c = 0.5 * (at_start > 0.0 ? std::min(liminf, at_start) : liminf);
  double last_bad = 0.0;
  for (const auto& ray : rays) {
    for (double r = r_start; r <= tail_r_hi; r *= 1.001) {
      const auto [a, b] = pots(r * ray);
      if (tail_quotient(std::min(a, b), r) < out.c) last_bad = std::max(last_bad, r);
    }
  }
  out.R1 = last_bad > 0.0 ? last_bad * 1.001 : r_start;
  return out;
}

}  // namespace cnls
