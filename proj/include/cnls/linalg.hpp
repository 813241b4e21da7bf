#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cnls/grid.hpp"

namespace cnls {

/// Direct solver for (-Lap + c) f = rhs under the grid's boundary conditions.
///
/// Radial grids accept a per-node shift and use a tridiagonal factorisation in
/// w = r f with the outermost node pinned to zero. Cartesian grids need a
/// constant shift and are diagonalised by a sine transform (DST-II/III), which
/// matches the antisymmetric face ghosts of apply_laplacian.
class ShiftedLaplaceSolver {
 public:
  ShiftedLaplaceSolver(GridPtr grid, std::vector<double> shift);
  ShiftedLaplaceSolver(GridPtr grid, double shift);
  ~ShiftedLaplaceSolver();
  ShiftedLaplaceSolver(ShiftedLaplaceSolver&&) noexcept;
  ShiftedLaplaceSolver& operator=(ShiftedLaplaceSolver&&) noexcept;

  void solve(std::span<const double> rhs, std::span<double> out) const;
  const GridPtr& grid() const { return grid_; }

 private:
  struct Impl;
  void init_radial(const std::vector<double>& shift);
  void init_cartesian(double shift);
  GridPtr grid_;
  std::unique_ptr<Impl> impl_;
};

/// Nodes whose value is fixed by the boundary condition (radial outermost node).
bool is_pinned_node(const Grid& grid, std::size_t idx);

}  // namespace cnls
