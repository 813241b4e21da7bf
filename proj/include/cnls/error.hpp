#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cnls {

enum class ErrorKind {
  configuration,
  domain,
  admissibility,
  degenerate_candidate,
  candidate,
  non_convergence,
  numeric,
  oracle_failure,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind drives the
/// CLI exit status and the structured error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an iterative solve exhausts its budget; carries the last residual.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double last_residual, int iterations)
      : Error(ErrorKind::non_convergence, what), last_residual_(last_residual), iterations_(iterations) {}
  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace cnls
