#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cnls/config.hpp"
#include "cnls/eps_solver.hpp"
#include "cnls/error.hpp"
#include "cnls/landscape.hpp"
#include "cnls/verify.hpp"

namespace cnls {

enum class Subcommand { oracle, ground_state, landscape, concentrate, verify, all };

std::string to_string(Subcommand s);
std::optional<Subcommand> subcommand_from_string(const std::string& name);

/// 2 for configuration and admissibility failures, 1 for everything else.
int exit_code_for(ErrorKind kind);

/// Lowercase hex SHA-256 of a file or a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

struct OracleRecord {
  double E1 = 0.0;
  std::string E1_text;   // %.17g, written verbatim to the cache
  bool from_cache = false;
  std::filesystem::path cache_file;
};

struct VerifyOutcome {
  std::vector<double> hardy_relative_margins;  // margin / int |grad f|^2, every stored field
  bool hardy_ok = true;
  std::vector<DecayFit> inner;                 // per ladder entry
  std::vector<DecayFit> band;                  // per ladder entry
  BandLadderFit band_fit;
  std::vector<DecayFit> tail;                  // smallest eps, one per alpha
  std::vector<DecayFit> envelope;              // smallest eps, one per alpha
  bool truncation_consistent = false;          // smallest eps
  TruncationReport truncation;
  std::vector<std::string> not_covered;        // tiers the grid cannot reach
  bool all_passed = false;
};

/// One run in one output directory. Steps cache their results so that `all`
/// reuses them; each step writes its artifacts as it finishes.
class Experiment {
 public:
  Experiment(ExperimentConfig cfg, std::filesystem::path out, std::size_t workers);

  OracleRecord oracle();
  GroundState ground_state(double aP, double bP, bool scalar);
  const LandscapeMap& landscape();
  const ConcentrationSeries& concentrate();
  VerifyOutcome verify();

  /// Writes manifest.json listing every file under the output directory.
  void write_manifest(const std::string& subcommand);

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& out() const { return out_; }
  double beta0_value();

 private:
  void check_admissible();
  ConcentrationSeries load_series();

  ExperimentConfig cfg_;
  std::filesystem::path out_;
  std::size_t workers_;
  std::optional<double> beta0_;
  std::optional<Admissibility> adm_;
  std::optional<LandscapeMap> landscape_;
  std::optional<ConcentrationSeries> series_;
  std::map<std::string, double> runtimes_;
};

struct RunRequest {
  Subcommand command = Subcommand::all;
  std::filesystem::path out;
  std::size_t workers = 1;
  std::optional<double> aP;
  std::optional<double> bP;
  std::optional<bool> scalar;
};

/// Runs a subcommand; on failure writes error.json into the output directory
/// and returns the exit status instead of throwing.
int run(const ExperimentConfig& cfg, const RunRequest& request);
/// Writes error.json for a failure raised outside run and returns its exit status.
int report_failure(const RunRequest& request, const Error& error);

}  // namespace cnls
