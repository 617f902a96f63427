#include "mixshrink/report.hpp"

#include <fstream>

namespace mixshrink {

using nlohmann::json;

json params_to_json(const MixtureParams& params) {
  json j;
  j["weights"] = std::vector<double>(params.weights.begin(),
                                     params.weights.end());
  j["coeffs"] = json::array();
  for (const auto& beta : params.coeffs)
    j["coeffs"].push_back(std::vector<double>(beta.begin(), beta.end()));
  j["variances"] =
      std::vector<double>(params.variances.begin(), params.variances.end());
  return j;
}

namespace {

Vector vector_from_json(const json& j, const std::string& context) {
  if (!j.is_array()) throw ConfigError(context + ": expected an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ConfigError(context + "[" + std::to_string(i) + "]: not a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

MixtureParams params_from_json(const json& j, const std::string& context) {
  for (const char* key : {"weights", "coeffs", "variances"})
    if (!j.contains(key))
      throw ConfigError(context + ": missing '" + std::string(key) + "'");

  MixtureParams params;
  params.weights = vector_from_json(j["weights"], context + ".weights");
  params.variances = vector_from_json(j["variances"], context + ".variances");
  if (!j["coeffs"].is_array())
    throw ConfigError(context + ".coeffs: expected an array of arrays");
  for (std::size_t c = 0; c < j["coeffs"].size(); ++c)
    params.coeffs.push_back(vector_from_json(
        j["coeffs"][c], context + ".coeffs[" + std::to_string(c) + "]"));
  return params;
}

SimulationSpec simulation_spec_from_json(const json& j,
                                         const std::string& origin) {
  std::vector<std::string> violations;
  auto fail = [&](const std::string& msg) { violations.push_back(msg); };

  auto require_number = [&](const char* key, bool integer) -> double {
    if (!j.contains(key)) {
      fail(std::string("missing field '") + key + "'");
      return 0.0;
    }
    if (integer ? !j[key].is_number_integer() : !j[key].is_number()) {
      fail(std::string("field '") + key + "' has the wrong type");
      return 0.0;
    }
    return j[key].get<double>();
  };

  SimulationSpec spec;
  spec.base.name = j.value("name", std::string("unnamed"));
  spec.base.n = static_cast<int>(require_number("n", true));
  spec.base.n_covariates =
      static_cast<int>(require_number("n_covariates", true));
  spec.base.n_replicates =
      static_cast<int>(require_number("n_replicates", true));
  spec.base.seed =
      static_cast<std::uint64_t>(require_number("seed", true));
  spec.base.k_folds = static_cast<int>(
      j.contains("k_folds") ? require_number("k_folds", true) : 5);
  spec.base.intercept = j.value("intercept", true);
  spec.base.n_workers = j.value("workers", 1);

  if (j.contains("rhos")) {
    if (!j["rhos"].is_array() || j["rhos"].empty()) {
      fail("field 'rhos' must be a non-empty array");
    } else {
      for (const auto& r : j["rhos"]) {
        if (!r.is_number()) {
          fail("field 'rhos' must contain numbers");
          break;
        }
        spec.rhos.push_back(r.get<double>());
      }
    }
  } else if (j.contains("rho")) {
    if (!j["rho"].is_number())
      fail("field 'rho' must be a number");
    else
      spec.rhos.push_back(j["rho"].get<double>());
  } else {
    fail("missing field 'rho' or 'rhos'");
  }
  for (double r : spec.rhos)
    if (r < 0.0 || r >= 1.0)
      fail("rho = " + std::to_string(r) + " outside [0,1)");

  if (j.contains("true_params")) {
    try {
      spec.base.true_params = params_from_json(j["true_params"],
                                               "true_params");
      spec.base.true_params.validate();
    } catch (const Error& err) {
      fail(err.what());
    }
  } else {
    fail("missing field 'true_params'");
  }

  if (j.contains("predict")) {
    try {
      spec.base.predict_rule =
          predict_rule_from_string(j["predict"].get<std::string>());
    } catch (const Error& err) {
      fail(err.what());
    }
  }

  FitConfig shared;
  shared.n_components =
      static_cast<int>(spec.base.true_params.n_components());
  if (j.contains("fit")) {
    const json& f = j["fit"];
    shared.tol = f.value("tol", shared.tol);
    shared.max_iter = f.value("max_iter", shared.max_iter);
    shared.n_starts = f.value("n_starts", shared.n_starts);
    shared.variance_floor = f.value("variance_floor", shared.variance_floor);
    shared.penalize_intercept =
        f.value("penalize_intercept", shared.penalize_intercept);
    shared.hkp_uses_sd = f.value("hkp_uses_sd", shared.hkp_uses_sd);
    shared.dj_literal = f.value("dj_literal", shared.dj_literal);
    if (f.contains("init")) {
      const std::string init = f["init"].get<std::string>();
      if (init == "random-partition") {
        shared.init = InitKind::RandomPartition;
      } else if (init == "kmeans") {
        shared.init = InitKind::KMeansLike;
      } else if (init == "truth") {
        // Synthetic-population runs may start each fit at the generating
        // parameters, isolating estimator behavior from initialization.
        shared.init = InitKind::Supplied;
        shared.supplied_init = spec.base.true_params;
      } else {
        fail("fit.init must be 'random-partition', 'kmeans' or 'truth'");
      }
    }
  }

  std::vector<std::string> methods = {"ml", "ridge", "lt-itr", "lt-hkp"};
  std::vector<std::string> engines = {"em", "cem", "sem"};
  if (j.contains("methods"))
    methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("engines"))
    engines = j["engines"].get<std::vector<std::string>>();

  for (const auto& m : methods) {
    for (const auto& e : engines) {
      FitConfig config = shared;
      try {
        config.method = method_from_string(m);
        config.engine = engine_from_string(e);
      } catch (const Error& err) {
        fail(err.what());
        continue;
      }
      spec.base.fit_configs.push_back(config);
    }
  }

  if (!violations.empty()) {
    std::string msg = origin + ": invalid experiment spec:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }

  spec.base.rho = spec.rhos.front();
  spec.base.validate();
  return spec;
}

SimulationSpec load_simulation_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParseError(path + ": " + err.what(), 0);
  }
  return simulation_spec_from_json(j, path);
}

json fit_config_to_json(const FitConfig& config) {
  json j;
  j["method"] = to_string(config.method);
  j["engine"] = to_string(config.engine);
  j["n_components"] = config.n_components;
  j["tol"] = config.tol;
  j["max_iter"] = config.max_iter;
  j["n_starts"] = config.n_starts;
  j["seed"] = config.seed;
  j["variance_floor"] = config.variance_floor;
  j["penalize_intercept"] = config.penalize_intercept;
  j["hkp_uses_sd"] = config.hkp_uses_sd;
  j["dj_literal"] = config.dj_literal;
  return j;
}

json fit_result_to_json(const FitResult& result, const FitConfig& config) {
  json j;
  j["config"] = fit_config_to_json(config);
  j["params"] = params_to_json(result.params);
  j["converged"] = result.converged;
  j["stop_reason"] = to_string(result.stop_reason);
  j["iterations"] = result.iterations;
  j["objective"] = result.best_objective;
  j["objective_trace"] = result.objective_trace;
  j["loglik_trace"] = result.loglik_trace;
  j["floor_hits"] = result.floor_hits;
  j["start_index"] = result.start_index;
  j["warnings"] = result.warnings;

  json k_trace = json::array();
  json d_trace = json::array();
  for (const auto& k : result.k_trace)
    k_trace.push_back(std::vector<double>(k.begin(), k.end()));
  for (const auto& d : result.d_trace)
    d_trace.push_back(std::vector<double>(d.begin(), d.end()));
  j["k_trace"] = std::move(k_trace);
  j["d_trace"] = std::move(d_trace);
  return j;
}

CsvTable table_from_rows(const std::vector<TableRow>& rows) {
  CsvTable table;
  table.header = {"method", "engine", "metric",    "median", "ci_low",
                  "ci_high", "ci_length", "n",     "rho"};
  for (const auto& row : rows) {
    table.rows.push_back({row.method, row.engine, row.metric,
                          format_double(row.median), format_double(row.ci_low),
                          format_double(row.ci_high),
                          format_double(row.ci_length), std::to_string(row.n),
                          format_double(row.rho)});
  }
  return table;
}

std::vector<TableRow> rows_from_table(const CsvTable& table,
                                      const std::string& origin) {
  const std::vector<std::string> expected = {
      "method", "engine", "metric",    "median", "ci_low",
      "ci_high", "ci_length", "n",     "rho"};
  if (table.header != expected)
    throw ParseError(origin + ": unexpected table header", 1);

  std::vector<TableRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const long line = static_cast<long>(i) + 2;
    const auto& cells = table.rows[i];
    TableRow row;
    row.method = cells[0];
    row.engine = cells[1];
    row.metric = cells[2];
    row.median = parse_cell(cells[3], origin, line, "median");
    row.ci_low = parse_cell(cells[4], origin, line, "ci_low");
    row.ci_high = parse_cell(cells[5], origin, line, "ci_high");
    row.ci_length = parse_cell(cells[6], origin, line, "ci_length");
    row.n = static_cast<int>(parse_cell(cells[7], origin, line, "n"));
    row.rho = parse_cell(cells[8], origin, line, "rho");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TableRow> rows_from_result(const ExperimentResult& result, int n,
                                       double rho) {
  std::vector<TableRow> rows;
  for (const auto& cell : result.cells) {
    const std::pair<std::string, const MetricsSummary*> metrics[] = {
        {"sse_beta", &cell.sse_beta},
        {"sse_pi", &cell.sse_pi},
        {"sse_sigma2", &cell.sse_sigma2},
        {"rmsep", &cell.rmsep}};
    for (const auto& [name, summary] : metrics) {
      TableRow row;
      row.method = to_string(cell.method);
      row.engine = to_string(cell.engine);
      row.metric = name;
      row.median = summary->median;
      row.ci_low = summary->ci_low;
      row.ci_high = summary->ci_high;
      row.ci_length = summary->ci_length;
      row.n = n;
      row.rho = rho;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace mixshrink
