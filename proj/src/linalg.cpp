#include "cnls/linalg.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "cnls/error.hpp"

namespace cnls {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(double* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<double, FftwDeleter>;

FftwBuffer fftw_buffer(std::size_t n) {
  return FftwBuffer(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
}

}  // namespace

struct ShiftedLaplaceSolver::Impl {
  // radial: Thomas factorisation of (2 + c h^2) w_i - w_{i-1} - w_{i+1}
  std::vector<double> diag_inv;  // 1 / modified diagonal
  std::vector<double> upper;     // modified super-diagonal
  double h = 0.0;

  // cartesian
  std::size_t n = 0;
  std::vector<double> inv_eig;  // 1 / ((2n)^3 * eigenvalue)
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

ShiftedLaplaceSolver::ShiftedLaplaceSolver(GridPtr grid, std::vector<double> shift)
    : grid_(std::move(grid)), impl_(std::make_unique<Impl>()) {
  if (is_radial(*grid_)) {
    init_radial(shift);
    return;
  }
  const double c = shift.empty() ? 0.0 : shift.front();
  for (double s : shift) {
    if (s != c) fail(ErrorKind::configuration, "cartesian preconditioner needs a constant shift");
  }
  init_cartesian(c);
}

ShiftedLaplaceSolver::ShiftedLaplaceSolver(GridPtr grid, double shift)
    : grid_(std::move(grid)), impl_(std::make_unique<Impl>()) {
  if (is_radial(*grid_)) {
    init_radial(std::vector<double>(node_count(*grid_), shift));
  } else {
    init_cartesian(shift);
  }
}

void ShiftedLaplaceSolver::init_radial(const std::vector<double>& shift) {
  const auto& g = std::get<RadialGrid>(*grid_);
  if (shift.size() != g.size()) fail(ErrorKind::configuration, "shift size does not match grid");
  const std::size_t m = g.size() - 1;  // unknowns; last node pinned
  const double h = g.spacing();
  impl_->h = h;
  impl_->diag_inv.resize(m);
  impl_->upper.resize(m);
  // sub- and super-diagonal are -1; upper holds -c'_i of the Thomas sweep
  double prev_upper = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(shift[i] >= 0.0)) fail(ErrorKind::numeric, "negative shift in Laplace preconditioner");
    const double d = 2.0 + shift[i] * h * h - prev_upper;
    impl_->diag_inv[i] = 1.0 / d;
    impl_->upper[i] = 1.0 / d;
    prev_upper = impl_->upper[i];
  }
}

void ShiftedLaplaceSolver::init_cartesian(double shift) {
  if (!(shift >= 0.0)) fail(ErrorKind::numeric, "negative shift in Laplace preconditioner");
  const auto& g = std::get<CartesianGrid3>(*grid_);
  const std::size_t n = g.n_per_axis();
  impl_->n = n;
  const double h = g.spacing();
  std::vector<double> lam(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sin(std::numbers::pi * double(k + 1) / (2.0 * double(n)));
    lam[k] = 4.0 * s * s / (h * h);
  }
  const double norm = std::pow(2.0 * double(n), 3);
  impl_->inv_eig.resize(n * n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        impl_->inv_eig[(i * n + j) * n + k] = 1.0 / (norm * (lam[i] + lam[j] + lam[k] + shift));
      }
    }
  }
  auto buf = fftw_buffer(n * n * n);
  const int ni = static_cast<int>(n);
  std::lock_guard lock(fftw_planner_mutex());
  impl_->forward = fftw_plan_r2r_3d(ni, ni, ni, buf.get(), buf.get(), FFTW_RODFT10, FFTW_RODFT10, FFTW_RODFT10,
                                    FFTW_ESTIMATE);
  impl_->backward = fftw_plan_r2r_3d(ni, ni, ni, buf.get(), buf.get(), FFTW_RODFT01, FFTW_RODFT01, FFTW_RODFT01,
                                     FFTW_ESTIMATE);
  if (!impl_->forward || !impl_->backward) fail(ErrorKind::numeric, "FFTW planning failed");
}

ShiftedLaplaceSolver::~ShiftedLaplaceSolver() = default;
ShiftedLaplaceSolver::ShiftedLaplaceSolver(ShiftedLaplaceSolver&&) noexcept = default;
ShiftedLaplaceSolver& ShiftedLaplaceSolver::operator=(ShiftedLaplaceSolver&&) noexcept = default;

void ShiftedLaplaceSolver::solve(std::span<const double> rhs, std::span<double> out) const {
  if (const auto* g = std::get_if<RadialGrid>(grid_.get())) {
    const std::size_t m = g->size() - 1;
    const double h2 = impl_->h * impl_->h;
    // forward sweep on w, then divide by r
    double prev = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double b = h2 * g->node(i) * rhs[i];
      prev = (b + prev) * impl_->diag_inv[i];
      out[i] = prev;
    }
    for (std::size_t i = m - 1; i-- > 0;) out[i] += impl_->upper[i] * out[i + 1];
    for (std::size_t i = 0; i < m; ++i) out[i] /= g->node(i);
    out[m] = 0.0;
    return;
  }
  const std::size_t total = impl_->n * impl_->n * impl_->n;
  auto buf = fftw_buffer(total);
  double* p = buf.get();
  for (std::size_t i = 0; i < total; ++i) p[i] = rhs[i];
  fftw_execute_r2r(impl_->forward, p, p);
  for (std::size_t i = 0; i < total; ++i) p[i] *= impl_->inv_eig[i];
  fftw_execute_r2r(impl_->backward, p, p);
  for (std::size_t i = 0; i < total; ++i) out[i] = p[i];
}

bool is_pinned_node(const Grid& grid, std::size_t idx) {
  if (const auto* g = std::get_if<RadialGrid>(&grid)) return idx + 1 == g->size();
  return false;
}

}  // namespace cnls
