#pragma once

#include <cmath>
#include <functional>
#include <numbers>

#include "cnls/grid.hpp"

namespace cnls::test {

/// Reference E1 for -Lap w + w = w^3 in R^3, from an adaptive Runge-Kutta
/// shooting at rtol 1e-13 with Simpson quadrature on [0, 14].
inline constexpr double E1_ref = 18.8972513025;

inline constexpr double pi = std::numbers::pi;

inline ScalarField sample(const GridPtr& g, const std::function<double(const Vec3&)>& f) {
  ScalarField out(g);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(node_point(*g, i));
  return out;
}

inline ScalarField radial(const GridPtr& g, const std::function<double(double)>& f) {
  return sample(g, [&](const Vec3& x) { return f(x.norm()); });
}

inline double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace cnls::test
