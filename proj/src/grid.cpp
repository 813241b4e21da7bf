#include "cnls/grid.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include "cnls/error.hpp"

namespace cnls {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

// 1D squared distance transform (lower envelope of parabolas), in index units.
void edt_1d(std::span<const double> f, std::span<double> d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;  // z[0] = -inf stops this at k == 0
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

RadialGrid::RadialGrid(double r_max, std::size_t n) : r_max_(r_max), n_(n), h_(r_max / double(n)) {
  if (n < min_points) {
    fail(ErrorKind::configuration, "radial grid needs at least 64 points, got " + std::to_string(n));
  }
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    fail(ErrorKind::configuration, "radial grid extent must be positive and finite");
  }
}

RadialGrid RadialGrid::with_spacing(double h, double r_min_extent) {
  if (!(h > 0.0)) fail(ErrorKind::configuration, "grid spacing must be positive");
  auto n = static_cast<std::size_t>(std::ceil(r_min_extent / h - 1e-9));
  n = std::max(n, min_points);
  return RadialGrid(h * double(n), n);
}

CartesianGrid3::CartesianGrid3(double half_width, std::size_t n_per_axis)
    : half_width_(half_width), n_(n_per_axis), h_(2.0 * half_width / double(n_per_axis)) {
  if (n_per_axis < min_points) {
    fail(ErrorKind::configuration,
         "cartesian grid needs at least 32 points per axis, got " + std::to_string(n_per_axis));
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    fail(ErrorKind::configuration, "cartesian half width must be positive and finite");
  }
}

Vec3 CartesianGrid3::node(std::size_t idx) const {
  const std::size_t k = idx % n_;
  const std::size_t j = (idx / n_) % n_;
  const std::size_t i = idx / (n_ * n_);
  return {coord(i), coord(j), coord(k)};
}

GridPtr make_grid(RadialGrid g) { return std::make_shared<const Grid>(std::move(g)); }
GridPtr make_grid(CartesianGrid3 g) { return std::make_shared<const Grid>(std::move(g)); }

std::size_t node_count(const Grid& grid) {
  return std::visit([](const auto& g) { return g.size(); }, grid);
}

Vec3 node_point(const Grid& grid, std::size_t idx) {
  return std::visit(overloaded{[idx](const RadialGrid& g) { return Vec3{g.node(idx), 0.0, 0.0}; },
                               [idx](const CartesianGrid3& g) { return g.node(idx); }},
                    grid);
}

double node_radius(const Grid& grid, std::size_t idx) {
  return std::visit(overloaded{[idx](const RadialGrid& g) { return g.node(idx); },
                               [idx](const CartesianGrid3& g) { return g.node(idx).norm(); }},
                    grid);
}

bool is_radial(const Grid& grid) { return std::holds_alternative<RadialGrid>(grid); }

double grid_spacing(const Grid& grid) {
  return std::visit([](const auto& g) { return g.spacing(); }, grid);
}

std::vector<double> cell_weights(const Grid& grid) {
  return std::visit(overloaded{[](const RadialGrid& g) {
                                 std::vector<double> w(g.size());
                                 const double h = g.spacing();
                                 for (std::size_t i = 0; i < g.size(); ++i) {
                                   const double r = g.node(i);
                                   w[i] = four_pi * r * r * h;
                                 }
                                 return w;
                               },
                               [](const CartesianGrid3& g) {
                                 const double h = g.spacing();
                                 return std::vector<double>(g.size(), h * h * h);
                               }},
                    grid);
}

void apply_laplacian(const Grid& grid, std::span<const double> f, std::span<double> out) {
  std::visit(overloaded{[&](const RadialGrid& g) {
                          const std::size_t n = g.size();
                          const double h = g.spacing();
                          const double inv_h2 = 1.0 / (h * h);
                          // w = r f; w(0) = 0 and w beyond the last node = 0
                          for (std::size_t i = 0; i < n; ++i) {
                            const double r = g.node(i);
                            const double wm = i == 0 ? 0.0 : g.node(i - 1) * f[i - 1];
                            const double wp = i + 1 < n ? g.node(i + 1) * f[i + 1] : 0.0;
                            out[i] = (wp - 2.0 * r * f[i] + wm) * inv_h2 / r;
                          }
                        },
                        [&](const CartesianGrid3& g) {
                          const std::size_t n = g.n_per_axis();
                          const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
                          const std::size_t sx = n * n, sy = n;
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < n; ++j) {
                              for (std::size_t k = 0; k < n; ++k) {
                                const std::size_t c = g.index(i, j, k);
                                const double fc = f[c];
                                const double xm = i > 0 ? f[c - sx] : -fc;
                                const double xp = i + 1 < n ? f[c + sx] : -fc;
                                const double ym = j > 0 ? f[c - sy] : -fc;
                                const double yp = j + 1 < n ? f[c + sy] : -fc;
                                const double zm = k > 0 ? f[c - 1] : -fc;
                                const double zp = k + 1 < n ? f[c + 1] : -fc;
                                out[c] = (xm + xp + ym + yp + zm + zp - 6.0 * fc) * inv_h2;
                              }
                            }
                          }
                        }},
             grid);
}

double dirichlet_energy(const Grid& grid, std::span<const double> f) {
  return std::visit(overloaded{[&](const RadialGrid& g) {
                                 const std::size_t n = g.size();
                                 double acc = 0.0;
                                 double w_prev = 0.0;
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double w = g.node(i) * f[i];
                                   acc += (w - w_prev) * (w - w_prev);
                                   w_prev = w;
                                 }
                                 acc += w_prev * w_prev;
                                 return four_pi * acc / g.spacing();
                               },
                               [&](const CartesianGrid3& g) {
                                 const std::size_t n = g.n_per_axis();
                                 double interior = 0.0;
                                 double boundary = 0.0;
                                 for (std::size_t i = 0; i < n; ++i) {
                                   for (std::size_t j = 0; j < n; ++j) {
                                     for (std::size_t k = 0; k < n; ++k) {
                                       const std::size_t c = g.index(i, j, k);
                                       const double fc = f[c];
                                       if (i + 1 < n) {
                                         const double d = f[c + n * n] - fc;
                                         interior += d * d;
                                       }
                                       if (j + 1 < n) {
                                         const double d = f[c + n] - fc;
                                         interior += d * d;
                                       }
                                       if (k + 1 < n) {
                                         const double d = f[c + 1] - fc;
                                         interior += d * d;
                                       }
                                       const int faces = (i == 0) + (i + 1 == n) + (j == 0) + (j + 1 == n) +
                                                         (k == 0) + (k + 1 == n);
                                       boundary += faces * fc * fc;
                                     }
                                   }
                                 }
                                 return g.spacing() * (interior + 2.0 * boundary);
                               }},
                    grid);
}

ScalarField::ScalarField(GridPtr g) : grid(std::move(g)) { values.assign(node_count(*grid), 0.0); }

ScalarField::ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != node_count(*grid)) {
    fail(ErrorKind::configuration, "field size does not match its grid");
  }
}

double ScalarField::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

bool ScalarField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

FieldPair::FieldPair(ScalarField u_, ScalarField v_) : u(std::move(u_)), v(std::move(v_)) {
  if (u.grid != v.grid) fail(ErrorKind::configuration, "field pair components live on different grids");
}

bool FieldPair::is_zero() const {
  auto zero = [](const ScalarField& f) {
    return std::all_of(f.values.begin(), f.values.end(), [](double x) { return x == 0.0; });
  };
  return zero(u) && zero(v);
}

FieldPair zero_pair(const GridPtr& grid) { return {ScalarField(grid), ScalarField(grid)}; }

ScalarField laplacian(const ScalarField& f) {
  ScalarField out(f.grid);
  apply_laplacian(*f.grid, f.values, out.values);
  return out;
}

double integrate(const ScalarField& f) {
  if (!f.all_finite()) fail(ErrorKind::numeric, "integrate: non-finite field values");
  return std::visit(overloaded{[&](const RadialGrid& g) {
                                 const std::size_t n = g.size();
                                 const double h = g.spacing();
                                 // samples of r^2 f at r = 0, h, ..., r_max
                                 std::vector<double> s(n + 1);
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double r = g.node(i);
                                   s[i + 1] = r * r * f[i];
                                 }
                                 s[0] = 3.0 * s[1] - 3.0 * s[2] + s[3];
                                 double acc = 0.0;
                                 std::size_t m = n;  // intervals
                                 std::size_t simpson_end = (m % 2 == 0) ? m : m - 3;
                                 for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
                                   acc += (h / 3.0) * (s[i] + 4.0 * s[i + 1] + s[i + 2]);
                                 }
                                 if (simpson_end != m) {
                                   const std::size_t i = simpson_end;
                                   acc += (3.0 * h / 8.0) * (s[i] + 3.0 * s[i + 1] + 3.0 * s[i + 2] + s[i + 3]);
                                 }
                                 return four_pi * acc;
                               },
                               [&](const CartesianGrid3& g) {
                                 const double h = g.spacing();
                                 double acc = 0.0;
                                 for (double x : f.values) acc += x;
                                 return acc * h * h * h;
                               }},
                    *f.grid);
}

double grad_norm_sq(const ScalarField& f) { return dirichlet_energy(*f.grid, f.values); }

ScalarField dist_to_set(const GridPtr& grid, const std::function<bool(const Vec3&)>& region) {
  ScalarField out(grid);
  const std::size_t n_nodes = node_count(*grid);
  std::vector<char> inside(n_nodes);
  bool any = false;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    inside[i] = region(node_point(*grid, i)) ? 1 : 0;
    any = any || inside[i];
  }
  if (!any) fail(ErrorKind::domain, "dist_to_set: region contains no grid node");

  std::visit(overloaded{[&](const RadialGrid& g) {
                          constexpr double inf = std::numeric_limits<double>::infinity();
                          const std::size_t n = g.size();
                          double last = -inf;
                          for (std::size_t i = 0; i < n; ++i) {
                            if (inside[i]) last = g.node(i);
                            out[i] = g.node(i) - last;
                          }
                          double next = inf;
                          for (std::size_t i = n; i-- > 0;) {
                            if (inside[i]) next = g.node(i);
                            out[i] = std::min(out[i], next - g.node(i));
                          }
                        },
                        [&](const CartesianGrid3& g) {
                          constexpr double inf = std::numeric_limits<double>::infinity();
                          const std::size_t n = g.n_per_axis();
                          std::vector<double> d2(n_nodes);
                          for (std::size_t i = 0; i < n_nodes; ++i) d2[i] = inside[i] ? 0.0 : inf;
                          std::vector<double> line(n), res(n);
                          std::vector<int> v;
                          std::vector<double> z;
                          const std::size_t strides[3] = {n * n, n, 1};
                          for (int axis = 0; axis < 3; ++axis) {
                            const std::size_t s = strides[axis];
                            for (std::size_t a = 0; a < n; ++a) {
                              for (std::size_t b = 0; b < n; ++b) {
                                std::size_t base = 0;
                                if (axis == 0) base = a * n + b;
                                if (axis == 1) base = a * n * n + b;
                                if (axis == 2) base = (a * n + b) * n;
                                for (std::size_t t = 0; t < n; ++t) line[t] = d2[base + t * s];
                                edt_1d(line, res, v, z);
                                for (std::size_t t = 0; t < n; ++t) d2[base + t * s] = res[t];
                              }
                            }
                          }
                          const double h = g.spacing();
                          for (std::size_t i = 0; i < n_nodes; ++i) out[i] = std::sqrt(d2[i]) * h;
                        }},
             *grid);
  return out;
}

}  // namespace cnls
