#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cnls/eps_solver.hpp"
#include "cnls/landscape.hpp"
#include "cnls/model.hpp"

namespace cnls {

/// Everything a run needs, parsed from one YAML file.
struct ExperimentConfig {
  std::string name = "experiment";
  CouplingParams params;
  PotentialSpec pots;
  DomainSpec domain;

  LimitGridSpec limit;           // landscape and ground-state solves
  EpsGridOptions eps_grid;
  EpsSolveOptions eps_solve;
  double admissibility_spacing = 0.0;  // 0 selects rho0 / 16
  double landscape_spacing = 0.0;      // 0 selects rho0 / 16
  double R2 = 0.0;                     // 0 selects the default

  std::vector<double> eps_ladder;
  std::vector<double> alphas{0.6, 1.0};
  double truncation_tol = 1e-6;

  // ground-state subcommand
  std::optional<double> gs_aP;
  std::optional<double> gs_bP;
  bool gs_scalar = false;

  std::filesystem::path output = "out";
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  /// Source text, echoed into the manifest.
  std::string source;
};

/// Parses YAML text. Unknown keys, missing required keys and malformed values
/// raise a configuration error naming the field and its line and column.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Default configuration used when no file is given: single radial well.
std::string standard_config_text();

}  // namespace cnls
