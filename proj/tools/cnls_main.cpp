#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cnls/config.hpp"
#include "cnls/experiment.hpp"

namespace {

std::optional<std::size_t> env_workers() {
  const char* raw = std::getenv("CNLS_WORKERS");
  if (!raw || !*raw) return std::nullopt;
  try {
    const long n = std::stol(raw);
    if (n >= 1) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  spdlog::warn("ignoring CNLS_WORKERS='{}': expected a positive integer", raw);
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled cubic Schroedinger system: limit ground states, landscape and concentration"};
  app.require_subcommand(1, 1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path;
  std::string out_dir;
  std::size_t workers = 0;
  std::string log_level = "info";
  app.add_option("--config", config_path, "YAML experiment file (default: built-in single-well config)");
  app.add_option("--out", out_dir, "output directory (default: the config's output entry)");
  app.add_option("--workers", workers, "worker threads (overrides CNLS_WORKERS and the config)")
      ->check(CLI::PositiveNumber);
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::optional<double> aP, bP;
  bool scalar = false;
  for (const char* name : {"oracle", "ground-state", "landscape", "concentrate", "verify", "all"}) {
    auto* sub = app.add_subcommand(name);
    if (std::string(name) == "ground-state") {
      sub->add_option("--a", aP, "coefficient aP");
      sub->add_option("--b", bP, "coefficient bP");
      sub->add_flag("--scalar", scalar, "solve the single-component problem (v = 0)");
    }
  }

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  const std::string chosen = app.get_subcommands().front()->get_name();
  cnls::RunRequest request;
  request.command = *cnls::subcommand_from_string(chosen);
  request.aP = aP;
  request.bP = bP;
  if (scalar) request.scalar = true;

  cnls::ExperimentConfig cfg;
  try {
    cfg = config_path.empty() ? cnls::parse_config(cnls::standard_config_text(), "<built-in>")
                              : cnls::load_config(config_path);
  } catch (const cnls::Error& e) {
    request.out = out_dir.empty() ? std::filesystem::path("out") : std::filesystem::path(out_dir);
    return cnls::report_failure(request, e);
  }
  request.out = out_dir.empty() ? cfg.output : std::filesystem::path(out_dir);
  request.workers = workers > 0 ? workers : env_workers().value_or(cfg.workers);
  return cnls::run(cfg, request);
}
