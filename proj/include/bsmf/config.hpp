// JSON configuration for single fits and (rho, phi) sweeps.
#pragma once

#include "bsmf/generator.hpp"
#include "bsmf/solver.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bsmf {

/// Malformed or inconsistent configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// lambda = (M + r + phi + 1) sigma_v2 unless a manual value is given.
struct LambdaRule {
  std::optional<double> manual;
  bool prescribed() const noexcept { return !manual.has_value(); }
};

struct FitConfig {
  ModelParams model;
  double rho = 1.0;  // informational when Psi was given explicitly
  SolverConfig solver;
  LambdaRule lambda;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> y_csv;       // fit this Y instead of generating
  std::optional<std::filesystem::path> output;      // JSON summary path (stdout if unset)
  std::optional<std::filesystem::path> export_dir;  // matrices as CSV
};

struct SweepConfig {
  ModelParams model;  // Psi and phi are set per cell
  std::vector<double> rho_grid;
  std::vector<double> phi_values;
  int trials_per_cell = 10;
  std::uint64_t base_seed = 1;
  SolverConfig solver;
  LambdaRule lambda;
  std::filesystem::path output_path = "sweep.csv";
  bool record_wall_time = false;
  int threads = 1;

  void validate() const;
};

/// n log-spaced points from 10^lo to 10^hi inclusive.
std::vector<double> log_grid(double log10_lo, double log10_hi, int n);

nlohmann::json model_to_json(const ModelParams& p);
/// `require_psi` = false lets sweep templates omit Psi/rho.
ModelParams model_from_json(const nlohmann::json& j, bool require_psi = true, double* rho_out = nullptr);

nlohmann::json solver_to_json(const SolverConfig& c);
SolverConfig solver_from_json(const nlohmann::json& j);

FitConfig fit_config_from_json(const nlohmann::json& j);
SweepConfig sweep_config_from_json(const nlohmann::json& j);

/// Reads and parses a JSON file; throws ConfigError on I/O or syntax errors.
nlohmann::json load_json_file(const std::filesystem::path& path);

/// The objective parameters for a model with the given Psi/phi under a lambda rule.
ObjectiveParams make_objective(const ModelParams& p, const LambdaRule& rule);

}  // namespace bsmf
