#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace cnls {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

/// Uniform radial grid on (0, r_max] for radially symmetric functions on R^3.
///
/// Nodes sit at r_i = (i+1) h, h = r_max / n. The origin is not a node: the
/// Laplacian works on w = r f, which is odd across the origin, so w(0) = 0
/// encodes the even reflection f'(0) = 0. The outermost node carries the
/// Dirichlet datum; beyond it the stencil sees zero.
class RadialGrid {
 public:
  static constexpr std::size_t min_points = 64;

  RadialGrid(double r_max, std::size_t n);
  /// Grid with spacing h and enough nodes to reach at least r_min_extent.
  static RadialGrid with_spacing(double h, double r_min_extent);

  double r_max() const { return r_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  double node(std::size_t i) const { return static_cast<double>(i + 1) * h_; }

 private:
  double r_max_;
  std::size_t n_;
  double h_;
};

/// Cell-centred grid on the box [-half_width, half_width]^3. Node coordinates
/// are -half_width + (i + 1/2) h; Dirichlet data are imposed on the box faces
/// through antisymmetric ghosts.
class CartesianGrid3 {
 public:
  static constexpr std::size_t min_points = 32;

  CartesianGrid3(double half_width, std::size_t n_per_axis);

  double half_width() const { return half_width_; }
  std::size_t n_per_axis() const { return n_; }
  std::size_t size() const { return n_ * n_ * n_; }
  double spacing() const { return h_; }
  double coord(std::size_t i) const { return -half_width_ + (static_cast<double>(i) + 0.5) * h_; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * n_ + j) * n_ + k; }
  Vec3 node(std::size_t idx) const;

 private:
  double half_width_;
  std::size_t n_;
  double h_;
};

using Grid = std::variant<RadialGrid, CartesianGrid3>;
using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(RadialGrid g);
GridPtr make_grid(CartesianGrid3 g);

std::size_t node_count(const Grid& grid);
/// Position of a node. Radial nodes are reported on the positive x axis.
Vec3 node_point(const Grid& grid, std::size_t idx);
double node_radius(const Grid& grid, std::size_t idx);
bool is_radial(const Grid& grid);
double grid_spacing(const Grid& grid);

/// Per-node weights w_i with sum_i w_i f_i (-Lap f)_i == dirichlet_energy(f)
/// exactly; the solvers use this inner product.
std::vector<double> cell_weights(const Grid& grid);

void apply_laplacian(const Grid& grid, std::span<const double> f, std::span<double> out);
double dirichlet_energy(const Grid& grid, std::span<const double> f);

struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g);
  ScalarField(GridPtr g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  double max() const;
  bool all_finite() const;
};

/// The two components (u, v) on a shared grid.
struct FieldPair {
  ScalarField u;
  ScalarField v;

  FieldPair() = default;
  FieldPair(ScalarField u_, ScalarField v_);
  const GridPtr& grid() const { return u.grid; }
  bool is_zero() const;
};

/// Pair of zero fields on the grid.
FieldPair zero_pair(const GridPtr& grid);

ScalarField laplacian(const ScalarField& f);
/// Integral over R^3. Radial: composite Simpson on r^2 f with the origin value
/// extrapolated quadratically. Cartesian: midpoint sum.
double integrate(const ScalarField& f);
/// Integral of |grad f|^2 from squared first differences (of r f on the radial
/// grid), summation-by-parts consistent with laplacian.
double grad_norm_sq(const ScalarField& f);
/// Euclidean distance from every node to the nearest node inside the region.
ScalarField dist_to_set(const GridPtr& grid, const std::function<bool(const Vec3&)>& region);

}  // namespace cnls
