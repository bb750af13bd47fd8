// Experiment harness: single fits with a JSON summary, (rho, phi) sweeps
// written as CSV, per-cell aggregates and plot-ready series.
#pragma once

#include "bsmf/config.hpp"
#include "bsmf/matrix_io.hpp"
#include "bsmf/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bsmf {

struct FitReport {
  FitResult fit;
  nlohmann::json summary;
};

/// Generates (or loads) Y, fits it, aligns against the ground truth when one
/// exists and compares with the LMMSE benchmark.
FitReport run_fit(const FitConfig& cfg);

struct SweepRecord {
  double rho = 0.0;
  double phi = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double sinr_map_db = 0.0;
  double sinr_lmmse_db = 0.0;
  double objective_final = 0.0;
  int outer_iters = 0;
  double wall_time_s = 0.0;

  bool ok() const { return status == "ok"; }
};

struct SweepAggregate {
  double rho = 0.0;
  double phi = 0.0;
  int trials_ok = 0;
  double mean_sinr_db = 0.0;
  double std_sinr_db = 0.0;
  double mean_lmmse_db = 0.0;
  double std_lmmse_db = 0.0;
};

struct PlotRow {
  double log10_rho = 0.0;
  double phi = 0.0;
  double mean_sinr_db = 0.0;
  double std_sinr_db = 0.0;
  double mean_lmmse_db = 0.0;
};

inline const std::vector<std::string> kRecordColumns = {
    "rho", "phi", "trial", "seed", "status", "sinr_map_db", "sinr_lmmse_db", "objective_final", "outer_iters",
    "wall_time_s"};
inline const std::vector<std::string> kAggregateColumns = {
    "rho", "phi", "trials_ok", "mean_sinr_db", "std_sinr_db", "mean_lmmse_db", "std_lmmse_db"};
inline const std::vector<std::string> kPlotColumns = {"log10_rho", "phi", "mean_sinr_db", "std_sinr_db",
                                                      "mean_lmmse_db"};

/// Seed of one sweep cell.
std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t rho_index, std::size_t phi_index, int trial);

/// Runs one (rho, phi, trial) cell. Numerical failures become a status string.
SweepRecord run_cell(const SweepConfig& cfg, std::size_t rho_index, std::size_t phi_index, int trial);

/// All cells in (phi, rho, trial) order, computed on `cfg.threads` workers.
std::vector<SweepRecord> run_sweep(const SweepConfig& cfg);

/// Mean/stddev of successful trials per (phi, rho) cell, in record order.
std::vector<SweepAggregate> aggregate(const std::vector<SweepRecord>& records);

std::vector<PlotRow> plot_rows(const std::vector<SweepAggregate>& agg);

void write_records_csv(std::ostream& os, const std::vector<SweepRecord>& records);
void write_aggregate_csv(std::ostream& os, const std::vector<SweepAggregate>& agg);
void write_plot_csv(std::ostream& os, const std::vector<PlotRow>& rows);

/// Parses an aggregate CSV. Throws InvalidArgument when a required column is missing.
std::vector<SweepAggregate> parse_aggregate_csv(const CsvTable& table);
std::vector<PlotRow> parse_plot_csv(const CsvTable& table);

/// "<stem>_aggregate.csv" next to the records file.
std::filesystem::path aggregate_path_for(const std::filesystem::path& records_path);

}  // namespace bsmf
