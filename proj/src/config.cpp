#include "bsmf/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

namespace bsmf {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const char* where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError(std::string("unknown key '") + item.key() + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(std::string(what) + " rows must be arrays of equal length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!row[k].is_number()) throw ConfigError(std::string(what) + " entries must be numbers");
      A(i, k) = row[k].get<double>();
    }
  }
  return A;
}

json matrix_to_json(const Matrix& A) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < A.cols(); ++k) row.push_back(A(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

LambdaRule lambda_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "prescribed") return {};
    throw ConfigError("lambda must be \"prescribed\" or a positive number");
  }
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!(v > 0.0)) throw ConfigError("manual lambda must be positive");
    return {v};
  }
  throw ConfigError("lambda must be \"prescribed\" or a positive number");
}

std::vector<double> rho_grid_from_json(const json& j) {
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError("rho_grid entries must be numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  reject_unknown(j, "rho_grid", {"log10_min", "log10_max", "points"});
  return log_grid(get_or(j, "log10_min", -4.0), get_or(j, "log10_max", 2.0), get_or(j, "points", 13));
}

}  // namespace

std::vector<double> log_grid(double log10_lo, double log10_hi, int n) {
  if (n < 1) throw ConfigError("grid needs at least one point");
  if (n == 1) return {std::pow(10.0, log10_lo)};
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::pow(10.0, log10_lo + (log10_hi - log10_lo) * i / (n - 1));
  return out;
}

json model_to_json(const ModelParams& p) {
  json j{{"M", p.M},         {"r", p.r},     {"N", p.N},
         {"sigma_v2", p.sigma_v2}, {"phi", p.phi}, {"domain", p.domain.token()},
         {"Psi", matrix_to_json(p.Psi)}};
  switch (p.h_row_covariance_mode) {
    case HRowCovarianceMode::Identity: j["h_row_covariance"] = "identity"; break;
    case HRowCovarianceMode::SampleInverseWishart: j["h_row_covariance"] = "inverse_wishart"; break;
    case HRowCovarianceMode::Explicit:
      j["h_row_covariance"] = json{{"explicit", matrix_to_json(*p.explicit_sigma_h)}};
      break;
  }
  return j;
}

ModelParams model_from_json(const json& j, bool require_psi, double* rho_out) {
  reject_unknown(j, "model", {"M", "r", "N", "sigma_v2", "phi", "domain", "h_row_covariance", "rho", "Psi"});
  ModelParams p;
  p.M = get_or(j, "M", 20);
  p.r = get_or(j, "r", 5);
  p.N = get_or(j, "N", 1000);
  p.sigma_v2 = get_or(j, "sigma_v2", 0.01);
  p.phi = get_or(j, "phi", 6.0);
  if (p.r < 1) throw ConfigError("r must be positive");
  try {
    p.domain = DomainSpec::from_token(get_or<std::string>(j, "domain", "linf_ball"), p.r);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("h_row_covariance")) {
    const auto& h = j.at("h_row_covariance");
    if (h == "identity") {
      p.h_row_covariance_mode = HRowCovarianceMode::Identity;
    } else if (h == "inverse_wishart") {
      p.h_row_covariance_mode = HRowCovarianceMode::SampleInverseWishart;
    } else if (h.is_object() && h.contains("explicit")) {
      p.h_row_covariance_mode = HRowCovarianceMode::Explicit;
      p.explicit_sigma_h = matrix_from_json(h.at("explicit"), "h_row_covariance.explicit");
    } else {
      throw ConfigError("h_row_covariance must be \"identity\", \"inverse_wishart\" or {\"explicit\": [[...]]}");
    }
  }
  if (j.contains("Psi") && j.contains("rho")) throw ConfigError("give either Psi or rho, not both");
  double rho = 1.0;
  if (j.contains("Psi")) {
    p.Psi = matrix_from_json(j.at("Psi"), "Psi");
    rho = std::nan("");
  } else {
    rho = get_or(j, "rho", 1.0);
    if (!(rho > 0.0)) throw ConfigError("rho must be positive");
    p.Psi = psi_from_rho(rho, p.phi, p.r);
  }
  if (rho_out) *rho_out = rho;
  if (require_psi) {
    try {
      p.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  return p;
}

json solver_to_json(const SolverConfig& c) {
  json j{{"max_outer_iters", c.max_outer_iters},
         {"inner_iters_H", c.inner_iters_H},
         {"inner_iters_S", c.inner_iters_S},
         {"rel_obj_tol", c.rel_obj_tol},
         {"seed", c.seed}};
  if (c.step_rule.kind == StepRuleKind::Backtracking) {
    j["step_rule"] = json{{"backtracking", {{"shrink", c.step_rule.shrink}, {"max_tries", c.step_rule.max_tries}}}};
  } else {
    j["step_rule"] = "lipschitz";
  }
  if (const auto* g = std::get_if<RandomGaussianInit>(&c.init)) {
    j["init"] = json{{"random_gaussian", {{"scale", g->scale}}}};
  } else {
    j["init"] = "svd";
  }
  j["continuation"] = c.continuation;
  j["h_update"] = c.h_update == HUpdate::VariableProjection ? "variable_projection" : "accelerated";
  return j;
}

SolverConfig solver_from_json(const json& j) {
  reject_unknown(j, "solver", {"max_outer_iters", "inner_iters_H", "inner_iters_S", "rel_obj_tol", "step_rule", "init", "h_update", "continuation", "seed"});
  SolverConfig c;
  c.max_outer_iters = get_or(j, "max_outer_iters", c.max_outer_iters);
  c.inner_iters_H = get_or(j, "inner_iters_H", c.inner_iters_H);
  c.inner_iters_S = get_or(j, "inner_iters_S", c.inner_iters_S);
  c.rel_obj_tol = get_or(j, "rel_obj_tol", c.rel_obj_tol);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.continuation = get_or(j, "continuation", c.continuation);
  if (j.contains("step_rule")) {
    const auto& s = j.at("step_rule");
    if (s == "lipschitz") {
      c.step_rule = StepRule::lipschitz();
    } else if (s == "backtracking") {
      c.step_rule = StepRule::backtracking();
    } else if (s.is_object() && s.contains("backtracking")) {
      const auto& b = s.at("backtracking");
      reject_unknown(b, "step_rule.backtracking", {"shrink", "max_tries"});
      c.step_rule = StepRule::backtracking(get_or(b, "shrink", 0.5), get_or(b, "max_tries", 60));
    } else {
      throw ConfigError("step_rule must be \"lipschitz\", \"backtracking\" or {\"backtracking\": {...}}");
    }
  }
  if (j.contains("init")) {
    const auto& i = j.at("init");
    if (i == "svd") {
      c.init = SvdWarmStartInit{};
    } else if (i == "random_gaussian") {
      c.init = RandomGaussianInit{};
    } else if (i.is_object() && i.contains("random_gaussian")) {
      const auto& g = i.at("random_gaussian");
      reject_unknown(g, "init.random_gaussian", {"scale"});
      c.init = RandomGaussianInit{get_or(g, "scale", 1.0)};
    } else {
      throw ConfigError("init must be \"svd\", \"random_gaussian\" or {\"random_gaussian\": {\"scale\": s}}");
    }
  }
  if (j.contains("h_update")) {
    const auto& h = j.at("h_update");
    if (h == "variable_projection") {
      c.h_update = HUpdate::VariableProjection;
    } else if (h == "accelerated") {
      c.h_update = HUpdate::Accelerated;
    } else {
      throw ConfigError("h_update must be \"variable_projection\" or \"accelerated\"");
    }
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

FitConfig fit_config_from_json(const json& j) {
  reject_unknown(j, "fit config", {"model", "solver", "lambda", "seed", "data", "output", "export_dir"});
  FitConfig c;
  c.model = model_from_json(j.value("model", json::object()), true, &c.rho);
  c.solver = solver_from_json(j.value("solver", json::object()));
  if (j.contains("lambda")) c.lambda = lambda_from_json(j.at("lambda"));
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("data")) {
    const auto& d = j.at("data");
    reject_unknown(d, "data", {"Y_csv"});
    c.y_csv = get_or<std::string>(d, "Y_csv", "");
    if (c.y_csv->empty()) throw ConfigError("data.Y_csv must be a path");
  }
  if (j.contains("output")) c.output = get_or<std::string>(j, "output", "");
  if (j.contains("export_dir")) c.export_dir = get_or<std::string>(j, "export_dir", "");
  make_objective(c.model, c.lambda);
  return c;
}

void SweepConfig::validate() const {
  if (rho_grid.empty()) throw ConfigError("rho_grid must be nonempty");
  for (double rho : rho_grid)
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho_grid entries must be positive");
  if (phi_values.empty()) throw ConfigError("phi_values must be nonempty");
  if (trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  for (double phi : phi_values) {
    ModelParams p = model;
    p.phi = phi;
    try {
      p.Psi = psi_from_rho(rho_grid.front(), phi, p.r);
      p.validate();
      make_objective(p, lambda);
    } catch (const InvalidArgument& e) {
      throw ConfigError("phi=" + std::to_string(phi) + ": " + e.what());
    }
  }
}

SweepConfig sweep_config_from_json(const json& j) {
  reject_unknown(j, "sweep config", {"model", "rho_grid", "phi_values", "trials_per_cell", "base_seed", "solver",
                                     "lambda", "output_path", "record_wall_time", "threads"});
  SweepConfig c;
  const json model = j.value("model", json::object());
  if (model.contains("rho") || model.contains("Psi"))
    throw ConfigError("sweep model must not set rho or Psi; they come from rho_grid");
  c.model = model_from_json(model, false);
  c.rho_grid = j.contains("rho_grid") ? rho_grid_from_json(j.at("rho_grid")) : log_grid(-4.0, 2.0, 13);
  c.phi_values = get_or(j, "phi_values", std::vector<double>{6.0, 250.0});
  c.trials_per_cell = get_or(j, "trials_per_cell", c.trials_per_cell);
  c.base_seed = get_or<std::uint64_t>(j, "base_seed", c.base_seed);
  c.solver = solver_from_json(j.value("solver", json::object()));
  if (j.contains("lambda")) c.lambda = lambda_from_json(j.at("lambda"));
  c.output_path = get_or<std::string>(j, "output_path", c.output_path.string());
  c.record_wall_time = get_or(j, "record_wall_time", c.record_wall_time);
  c.threads = get_or(j, "threads", c.threads);
  c.validate();
  return c;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

ObjectiveParams make_objective(const ModelParams& p, const LambdaRule& rule) {
  try {
    if (rule.manual) return ObjectiveParams::with_lambda(*rule.manual, p.Psi, p.phi, p.M);
    return ObjectiveParams(p.sigma_v2, p.Psi, p.phi, p.M);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("objective parameters: ") + e.what());
  }
}

}  // namespace bsmf
