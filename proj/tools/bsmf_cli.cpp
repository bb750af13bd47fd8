// bsmf: fit, sweep and plot-data front end.
//
// Exit codes: 0 success, 2 bad config / input, 3 numerical failure
// (for sweeps: every cell failed).
#include "bsmf/sweep.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitNumerical = 3;

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw bsmf::InvalidArgument("cannot open " + p.string() + " for writing");
  return out;
}

// --threads beats BSMF_THREADS, which beats the config file.
int resolve_threads(std::optional<int> flag, int from_config) {
  if (flag) return *flag;
  if (const char* env = std::getenv("BSMF_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid BSMF_THREADS='" << env << "'\n";
  }
  return from_config;
}

int cmd_fit(const std::string& config_path, std::optional<std::uint64_t> seed) {
  auto cfg = bsmf::fit_config_from_json(bsmf::load_json_file(config_path));
  if (seed) cfg.seed = *seed;
  const auto report = bsmf::run_fit(cfg);
  const std::string text = report.summary.dump(2) + "\n";
  if (cfg.output) {
    auto out = open_out(*cfg.output);
    out << text;
  } else {
    std::cout << text;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path, std::optional<std::uint64_t> seed,
              std::optional<int> threads) {
  auto cfg = bsmf::sweep_config_from_json(bsmf::load_json_file(config_path));
  if (seed) cfg.base_seed = *seed;
  if (!out_path.empty()) cfg.output_path = out_path;
  cfg.threads = resolve_threads(threads, cfg.threads);

  const auto records = bsmf::run_sweep(cfg);
  {
    auto out = open_out(cfg.output_path);
    bsmf::write_records_csv(out, records);
  }
  const auto agg_path = bsmf::aggregate_path_for(cfg.output_path);
  {
    auto out = open_out(agg_path);
    bsmf::write_aggregate_csv(out, bsmf::aggregate(records));
  }
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.ok() ? 0 : 1;
  std::cerr << "sweep: " << records.size() << " cells, " << failed << " failed; wrote " << cfg.output_path.string()
            << " and " << agg_path.string() << "\n";
  return failed == records.size() ? kExitNumerical : 0;
}

int cmd_plot_data(const std::string& in_path, const std::string& out_path) {
  const auto table = bsmf::read_csv_table(std::filesystem::path(in_path));
  if (table.header.empty()) {
    std::cerr << "warning: " << in_path << " is empty; writing header only\n";
    auto out = open_out(out_path);
    bsmf::write_plot_csv(out, {});
    return 0;
  }
  const auto rows = bsmf::plot_rows(bsmf::parse_aggregate_csv(table));
  if (rows.empty()) std::cerr << "warning: " << in_path << " has no data rows; writing header only\n";
  auto out = open_out(out_path);
  bsmf::write_plot_csv(out, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Determinant-regularized structured matrix factorization experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--seed", seed, "Override the config seed (base seed for sweeps)");
  app.add_option("--threads", threads, "Worker threads for sweeps (env BSMF_THREADS)")->check(CLI::PositiveNumber);

  std::string config_path, out_path, in_path;
  auto* fit = app.add_subcommand("fit", "Generate data (or load Y), fit, and print a JSON summary");
  fit->add_option("--config", config_path, "JSON config file")->required();

  auto* sweep = app.add_subcommand("sweep", "Run the (rho, phi, trial) grid and write CSV records");
  sweep->add_option("--config", config_path, "JSON config file")->required();
  sweep->add_option("--out", out_path, "Records CSV (overrides output_path)");

  auto* plot = app.add_subcommand("plot-data", "Turn an aggregate CSV into plot-ready series");
  plot->add_option("--in", in_path, "Aggregate CSV")->required();
  plot->add_option("--out", out_path, "Plot CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadInput;
  }

  try {
    if (*fit) return cmd_fit(config_path, seed);
    if (*sweep) return cmd_sweep(config_path, out_path, seed, threads);
    if (*plot) return cmd_plot_data(in_path, out_path);
  } catch (const bsmf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const bsmf::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return 0;
}
