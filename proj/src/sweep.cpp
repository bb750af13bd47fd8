#include "bsmf/sweep.hpp"

#include "bsmf/rng.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

namespace bsmf {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Recovery {
  Alignment alignment;
  double sinr_map_db;
  double sinr_lmmse_db;
};

Recovery evaluate_recovery(const GeneratedData& data, const ModelParams& p, const FitResult& fit) {
  Recovery rec;
  rec.alignment = align(data.S_g, fit.S_hat, p.domain);
  rec.sinr_map_db = sinr_db(data.S_g, apply_alignment(rec.alignment, fit.S_hat));
  rec.sinr_lmmse_db = sinr_db(data.S_g, lmmse_estimate(data.Y, data.H_g, p.sigma_v2, p.domain));
  return rec;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? kNaN : 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

std::vector<int> require_columns(const CsvTable& t, const std::vector<std::string>& names) {
  std::vector<int> idx;
  for (const auto& n : names) {
    const int c = t.column(n);
    if (c < 0) throw InvalidArgument("CSV is missing column '" + n + "'");
    idx.push_back(c);
  }
  return idx;
}

}  // namespace

FitReport run_fit(const FitConfig& cfg) {
  FitReport report;
  ModelParams p = cfg.model;
  Rng rng(cfg.seed);
  std::optional<GeneratedData> data;
  Matrix Y;
  if (cfg.y_csv) {
    Y = read_matrix_csv(*cfg.y_csv);
    if (Y.rows() != p.M || Y.cols() != p.N)
      throw ConfigError("Y_csv is " + std::to_string(Y.rows()) + "x" + std::to_string(Y.cols()) +
                        " but the model says M=" + std::to_string(p.M) + ", N=" + std::to_string(p.N));
  } else {
    data = generate(p, rng);
    Y = data->Y;
  }

  const ObjectiveParams obj = make_objective(p, cfg.lambda);
  SolverConfig solver = cfg.solver;
  report.fit = fit(Y, p.domain, obj, solver);
  const FitResult& f = report.fit;

  json s;
  s["status"] = "ok";
  s["model"] = model_to_json(p);
  s["rho"] = std::isnan(cfg.rho) ? json(nullptr) : json(cfg.rho);
  s["lambda"] = obj.lambda();
  s["lambda_rule"] = cfg.lambda.prescribed() ? "prescribed" : "manual";
  s["beta"] = obj.beta();
  s["seed"] = cfg.seed;
  s["solver"] = solver_to_json(solver);
  s["objective_initial"] = f.initial_objective;
  s["objective_final"] = f.final_objective();
  s["outer_iters"] = f.outer_iters_used;
  s["converged"] = f.converged;
  s["stationarity_S"] = f.stationarity_S;
  s["stationarity_H"] = f.stationarity_H;
  if (data) {
    const Recovery rec = evaluate_recovery(*data, p, f);
    s["sinr_map_db"] = rec.sinr_map_db;
    s["sinr_lmmse_db"] = rec.sinr_lmmse_db;
    s["alignment"] = json{{"perm", rec.alignment.perm},
                          {"signs", rec.alignment.signs},
                          {"degenerate_rows", rec.alignment.degenerate_rows}};
  } else {
    s["sinr_map_db"] = nullptr;
    s["sinr_lmmse_db"] = nullptr;
  }
  report.summary = std::move(s);

  if (cfg.export_dir) {
    std::filesystem::create_directories(*cfg.export_dir);
    write_matrix_csv(*cfg.export_dir / "Y.csv", Y);
    write_matrix_csv(*cfg.export_dir / "H_hat.csv", f.H_hat);
    write_matrix_csv(*cfg.export_dir / "S_hat.csv", f.S_hat);
    if (data) {
      write_matrix_csv(*cfg.export_dir / "H_g.csv", data->H_g);
      write_matrix_csv(*cfg.export_dir / "S_g.csv", data->S_g);
      write_matrix_csv(*cfg.export_dir / "V_g.csv", data->V_g);
      write_matrix_csv(*cfg.export_dir / "Sigma_h.csv", data->Sigma_h);
    }
  }
  return report;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t rho_index, std::size_t phi_index, int trial) {
  return derive_seed(base_seed, {rho_index, phi_index, static_cast<std::uint64_t>(trial)});
}

SweepRecord run_cell(const SweepConfig& cfg, std::size_t rho_index, std::size_t phi_index, int trial) {
  SweepRecord rec;
  rec.rho = cfg.rho_grid.at(rho_index);
  rec.phi = cfg.phi_values.at(phi_index);
  rec.trial = trial;
  rec.seed = cell_seed(cfg.base_seed, rho_index, phi_index, trial);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    ModelParams p = cfg.model;
    p.phi = rec.phi;
    p.Psi = psi_from_rho(rec.rho, rec.phi, p.r);
    Rng rng(rec.seed);
    const GeneratedData data = generate(p, rng);
    SolverConfig solver = cfg.solver;
    solver.seed = derive_seed(rec.seed, {1});
    const FitResult f = fit(data.Y, p.domain, make_objective(p, cfg.lambda), solver);
    const Recovery r = evaluate_recovery(data, p, f);
    rec.sinr_map_db = r.sinr_map_db;
    rec.sinr_lmmse_db = r.sinr_lmmse_db;
    rec.objective_final = f.final_objective();
    rec.outer_iters = f.outer_iters_used;
  } catch (const NumericalError&) {
    rec.status = "numerical_error";
  } catch (const std::exception&) {
    rec.status = "error";
  }
  if (!rec.ok()) {
    rec.sinr_map_db = rec.sinr_lmmse_db = rec.objective_final = kNaN;
    rec.outer_iters = 0;
  }
  if (cfg.record_wall_time)
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  struct Cell {
    std::size_t rho, phi;
    int trial;
  };
  std::vector<Cell> cells;
  for (std::size_t f = 0; f < cfg.phi_values.size(); ++f)
    for (std::size_t r = 0; r < cfg.rho_grid.size(); ++r)
      for (int t = 0; t < cfg.trials_per_cell; ++t) cells.push_back({r, f, t});

  std::vector<SweepRecord> out(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      out[i] = run_cell(cfg, cells[i].rho, cells[i].phi, cells[i].trial);
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  return out;
}

std::vector<SweepAggregate> aggregate(const std::vector<SweepRecord>& records) {
  std::vector<std::pair<double, double>> order;
  std::map<std::pair<double, double>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.phi, r.rho);
    if (!groups.count(key)) order.push_back(key);
    auto& g = groups[key];
    if (r.ok()) {
      g.first.push_back(r.sinr_map_db);
      g.second.push_back(r.sinr_lmmse_db);
    }
  }
  std::vector<SweepAggregate> agg;
  for (const auto& key : order) {
    const auto& [map, lmmse] = groups[key];
    agg.push_back({key.second, key.first, static_cast<int>(map.size()), mean_of(map), stddev_of(map),
                   mean_of(lmmse), stddev_of(lmmse)});
  }
  return agg;
}

std::vector<PlotRow> plot_rows(const std::vector<SweepAggregate>& agg) {
  std::vector<PlotRow> rows;
  for (const auto& a : agg)
    rows.push_back({std::log10(a.rho), a.phi, a.mean_sinr_db, a.std_sinr_db, a.mean_lmmse_db});
  return rows;
}

void write_records_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  write_row(os, kRecordColumns);
  for (const auto& r : records)
    write_row(os, {format_number(r.rho), format_number(r.phi), std::to_string(r.trial), std::to_string(r.seed),
                   r.status, format_number(r.sinr_map_db), format_number(r.sinr_lmmse_db),
                   format_number(r.objective_final), std::to_string(r.outer_iters), format_number(r.wall_time_s)});
}

void write_aggregate_csv(std::ostream& os, const std::vector<SweepAggregate>& agg) {
  write_row(os, kAggregateColumns);
  for (const auto& a : agg)
    write_row(os, {format_number(a.rho), format_number(a.phi), std::to_string(a.trials_ok),
                   format_number(a.mean_sinr_db), format_number(a.std_sinr_db), format_number(a.mean_lmmse_db),
                   format_number(a.std_lmmse_db)});
}

void write_plot_csv(std::ostream& os, const std::vector<PlotRow>& rows) {
  write_row(os, kPlotColumns);
  for (const auto& p : rows)
    write_row(os, {format_number(p.log10_rho), format_number(p.phi), format_number(p.mean_sinr_db),
                   format_number(p.std_sinr_db), format_number(p.mean_lmmse_db)});
}

std::vector<SweepAggregate> parse_aggregate_csv(const CsvTable& table) {
  const auto c = require_columns(table, {"rho", "phi", "mean_sinr_db", "std_sinr_db", "mean_lmmse_db"});
  const int ok_col = table.column("trials_ok");
  const int lstd_col = table.column("std_lmmse_db");
  std::vector<SweepAggregate> out;
  for (const auto& row : table.rows) {
    SweepAggregate a;
    a.rho = parse_number(row[c[0]]);
    a.phi = parse_number(row[c[1]]);
    a.mean_sinr_db = parse_number(row[c[2]]);
    a.std_sinr_db = parse_number(row[c[3]]);
    a.mean_lmmse_db = parse_number(row[c[4]]);
    a.trials_ok = ok_col >= 0 ? static_cast<int>(parse_number(row[ok_col])) : 0;
    a.std_lmmse_db = lstd_col >= 0 ? parse_number(row[lstd_col]) : kNaN;
    if (!(a.rho > 0.0)) throw InvalidArgument("aggregate CSV has a non-positive rho");
    out.push_back(a);
  }
  return out;
}

std::vector<PlotRow> parse_plot_csv(const CsvTable& table) {
  const auto c = require_columns(table, kPlotColumns);
  std::vector<PlotRow> out;
  for (const auto& row : table.rows)
    out.push_back({parse_number(row[c[0]]), parse_number(row[c[1]]), parse_number(row[c[2]]),
                   parse_number(row[c[3]]), parse_number(row[c[4]])});
  return out;
}

std::filesystem::path aggregate_path_for(const std::filesystem::path& records_path) {
  auto p = records_path;
  const auto stem = p.stem().string();
  p.replace_filename(stem + "_aggregate.csv");
  return p;
}

}  // namespace bsmf
