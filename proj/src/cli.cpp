#include "mixshrink/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mixshrink/csv.hpp"
#include "mixshrink/engine.hpp"
#include "mixshrink/evaluation.hpp"
#include "mixshrink/report.hpp"

namespace mixshrink {

namespace {

constexpr std::uint64_t kDefaultSeed = 1234;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("MIXSHRINK_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
    throw ConfigError("MIXSHRINK_SEED is not an unsigned integer: '" +
                      std::string(env) + "'");
  }
  return kDefaultSeed;
}

std::string fmt6(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

std::vector<std::string> split_names(const std::string& csv_list) {
  std::vector<std::string> names;
  std::stringstream ss(csv_list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) names.push_back(item);
  return names;
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

void print_params(std::ostream& out, const MixtureParams& params) {
  for (Eigen::Index j = 0; j < params.n_components(); ++j) {
    out << "  component " << j + 1 << ": pi = " << fmt6(params.weights[j])
        << ", sigma2 = " << fmt6(params.variances[j]) << ", beta = [";
    for (Eigen::Index c = 0; c < params.coeffs[j].size(); ++c)
      out << (c ? ", " : "") << fmt6(params.coeffs[j][c]);
    out << "]\n";
  }
}

struct CommonFitFlags {
  std::string method = "ml";
  std::string engine = "em";
  int components = 1;
  double tol = 1e-6;
  int max_iter = 500;
  int starts = 5;
  std::optional<std::uint64_t> seed;
  std::string response;
  std::string covariates;
  bool no_intercept = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--method", method, "ml | ridge | lt-itr | lt-hkp");
    cmd->add_option("--engine", engine, "em | cem | sem");
    cmd->add_option("--components", components, "number of mixture components")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol", tol, "stopping tolerance");
    cmd->add_option("--max-iter", max_iter, "iteration cap");
    cmd->add_option("--starts", starts, "number of random restarts");
    cmd->add_option("--seed", seed, "RNG seed (default: MIXSHRINK_SEED or " +
                                        std::to_string(kDefaultSeed) + ")");
    cmd->add_option("--response", response, "response column name")
        ->required();
    cmd->add_option("--covariates", covariates,
                    "comma-separated covariate columns (default: all others)");
    cmd->add_flag("--no-intercept", no_intercept,
                  "do not add an intercept column");
  }

  FitConfig config() const {
    FitConfig cfg;
    cfg.method = method_from_string(method);
    cfg.engine = engine_from_string(engine);
    cfg.n_components = components;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.n_starts = starts;
    cfg.seed = resolve_seed(seed);
    return cfg;
  }
};

int cmd_fit(const std::string& csv_path, const CommonFitFlags& flags,
            const std::string& out_dir) {
  const CsvTable table = read_csv(csv_path);
  std::vector<std::string> names;
  const Dataset data =
      dataset_from_csv(table, csv_path, flags.response,
                       split_names(flags.covariates), !flags.no_intercept,
                       &names);

  const FitConfig config = flags.config();
  const FitResult result = fit(data, config);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  std::filesystem::create_directories(out_dir);
  write_json_file(std::filesystem::path(out_dir) / "fit_report.json",
                  fit_result_to_json(result, config));

  std::cout << "fit: " << to_string(config.method) << "/"
            << to_string(config.engine) << " on " << csv_path << " (n = "
            << data.n() << ", p = " << data.p() << ")\n";
  print_params(std::cout, result.params);
  std::cout << "  objective = " << fmt6(result.best_objective)
            << ", iterations = " << result.iterations << ", stop = "
            << to_string(result.stop_reason) << "\n";
  if (!result.k_trace.empty()) {
    std::cout << "  k = [";
    const Vector& k = result.k_trace.back();
    for (Eigen::Index j = 0; j < k.size(); ++j)
      std::cout << (j ? ", " : "") << fmt6(k[j]);
    std::cout << "], d = [";
    const Vector& d = result.d_trace.back();
    for (Eigen::Index j = 0; j < d.size(); ++j)
      std::cout << (j ? ", " : "") << fmt6(d[j]);
    std::cout << "]\n";
  }
  std::cout << "  report: "
            << (std::filesystem::path(out_dir) / "fit_report.json").string()
            << "\n";
  return 0;
}

int cmd_crossval(const std::string& csv_path, const CommonFitFlags& flags,
                 int folds, const std::string& predict_rule,
                 const std::string& out_dir) {
  const CsvTable table = read_csv(csv_path);
  const Dataset data = dataset_from_csv(table, csv_path, flags.response,
                                        split_names(flags.covariates),
                                        !flags.no_intercept, nullptr);

  const FitConfig config = flags.config();
  const PredictRule rule = predict_rule_from_string(predict_rule);
  RngStream rng(config.seed);
  const KfoldReport report =
      kfold_crossval(data, config, folds, rng, rule);

  std::cout << "crossval: " << to_string(config.method) << "/"
            << to_string(config.engine) << ", " << folds << " folds, predict = "
            << to_string(rule) << "\n";
  std::cout << "  RMSEP = " << fmt6(report.rmsep) << "\n";
  for (std::size_t f = 0; f < report.fold_rmsep.size(); ++f)
    std::cout << "  fold " << f + 1 << ": rmsep = "
              << fmt6(report.fold_rmsep[f]) << ", stop = "
              << to_string(report.fold_stops[f]) << "\n";

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json j;
    j["rmsep"] = report.rmsep;
    j["fold_rmsep"] = report.fold_rmsep;
    j["config"] = fit_config_to_json(config);
    j["folds"] = folds;
    j["predict"] = to_string(rule);
    nlohmann::json stops = nlohmann::json::array();
    for (const auto s : report.fold_stops) stops.push_back(to_string(s));
    j["fold_stops"] = std::move(stops);
    write_json_file(std::filesystem::path(out_dir) / "crossval_report.json",
                    j);
  }
  return 0;
}

int cmd_simulate(const std::string& spec_path, const std::string& out_dir,
                 std::optional<int> workers, std::optional<int> replicates,
                 std::optional<double> rho_override, std::optional<int> n,
                 std::optional<std::uint64_t> seed,
                 std::optional<std::string> predict) {
  SimulationSpec sim = load_simulation_spec(spec_path);
  if (workers) sim.base.n_workers = *workers;
  if (replicates) sim.base.n_replicates = *replicates;
  if (n) sim.base.n = *n;
  if (seed) sim.base.seed = *seed;
  if (rho_override) sim.rhos = {*rho_override};
  if (predict) sim.base.predict_rule = predict_rule_from_string(*predict);

  std::vector<TableRow> rows;
  nlohmann::json summary;
  summary["spec"] = sim.base.name;
  summary["n"] = sim.base.n;
  summary["n_replicates"] = sim.base.n_replicates;
  summary["seed"] = sim.base.seed;
  summary["predict"] = to_string(sim.base.predict_rule);
  summary["cells"] = nlohmann::json::array();

  for (double rho : sim.rhos) {
    ScenarioSpec scenario = sim.base;
    scenario.rho = rho;
    const ExperimentResult result = run_experiment(scenario);
    const auto rho_rows = rows_from_result(result, scenario.n, rho);
    rows.insert(rows.end(), rho_rows.begin(), rho_rows.end());

    for (const auto& cell : result.cells) {
      nlohmann::json c;
      c["method"] = to_string(cell.method);
      c["engine"] = to_string(cell.engine);
      c["rho"] = rho;
      c["n_used"] = cell.n_used;
      c["n_failed"] = cell.n_failed;
      c["n_degenerate_stops"] = cell.n_degenerate;
      summary["cells"].push_back(std::move(c));
      if (cell.n_failed > 0)
        std::cout << "note: " << to_string(cell.method) << "/"
                  << to_string(cell.engine) << " rho = " << fmt6(rho) << ": "
                  << cell.n_failed << " replicate(s) excluded\n";
    }
  }

  std::filesystem::create_directories(out_dir);
  const char* metrics[] = {"sse_beta", "sse_pi", "sse_sigma2", "rmsep"};
  for (const char* metric : metrics) {
    std::vector<TableRow> metric_rows;
    for (const auto& row : rows)
      if (row.metric == metric) metric_rows.push_back(row);
    write_csv_file(
        (std::filesystem::path(out_dir) / (std::string(metric) + ".csv"))
            .string(),
        table_from_rows(metric_rows));
  }
  write_json_file(std::filesystem::path(out_dir) / "summary.json", summary);

  std::cout << "simulate: " << sim.base.name << ", n = " << sim.base.n
            << ", replicates = " << sim.base.n_replicates << "\n";
  std::cout << "method  engine  rho     med(sse_beta)  med(sse_pi)  "
               "med(sse_sigma2)  med(rmsep)\n";
  for (std::size_t i = 0; i < rows.size(); i += 4) {
    // rows come in metric groups of four per cell
    const TableRow& b = rows[i];
    const TableRow* pi = &rows[i + 1];
    const TableRow* s2 = &rows[i + 2];
    const TableRow* rm = &rows[i + 3];
    std::printf("%-7s %-7s %-7.4g %-14.6g %-12.6g %-16.6g %-10.6g\n",
                b.method.c_str(), b.engine.c_str(), b.rho, b.median,
                pi->median, s2->median, rm->median);
  }
  std::cout << "tables written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Shrinkage estimation for mixtures of linear regressions"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a mixture to a CSV dataset");
  std::string fit_csv;
  std::string fit_out = ".";
  CommonFitFlags fit_flags;
  fit_cmd->add_option("csv", fit_csv, "input CSV path")->required();
  fit_flags.attach(fit_cmd);
  fit_cmd->add_option("--out", fit_out, "output directory for the JSON report");

  // crossval
  auto* cv_cmd =
      app.add_subcommand("crossval", "K-fold prediction error on a CSV");
  std::string cv_csv;
  std::string cv_out;
  int cv_folds = 5;
  std::string cv_predict = "mixture-mean";
  CommonFitFlags cv_flags;
  cv_cmd->add_option("csv", cv_csv, "input CSV path")->required();
  cv_flags.attach(cv_cmd);
  cv_cmd->add_option("--folds", cv_folds, "number of folds (>= 2)");
  cv_cmd->add_option("--predict", cv_predict,
                     "mixture-mean | max-component | component-draw");
  cv_cmd->add_option("--out", cv_out, "output directory for the JSON report");

  // simulate
  auto* sim_cmd =
      app.add_subcommand("simulate", "run a replication study from a spec");
  std::string sim_spec;
  std::string sim_out = "simout";
  std::optional<int> sim_workers;
  std::optional<int> sim_reps;
  std::optional<double> sim_rho;
  std::optional<int> sim_n;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::string> sim_predict;
  sim_cmd->add_option("spec", sim_spec, "experiment spec JSON path")
      ->required();
  sim_cmd->add_option("--out", sim_out, "output directory for CSV tables");
  sim_cmd->add_option("--workers", sim_workers, "worker thread count");
  sim_cmd->add_option("--replicates", sim_reps, "override replicate count");
  sim_cmd->add_option("--rho", sim_rho, "run a single collinearity level");
  sim_cmd->add_option("--n", sim_n, "override sample size");
  sim_cmd->add_option("--seed", sim_seed, "override experiment seed");
  sim_cmd->add_option("--predict", sim_predict,
                      "override held-out prediction rule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_csv, fit_flags, fit_out);
    if (cv_cmd->parsed())
      return cmd_crossval(cv_csv, cv_flags, cv_folds, cv_predict, cv_out);
    if (sim_cmd->parsed())
      return cmd_simulate(sim_spec, sim_out, sim_workers, sim_reps, sim_rho,
                          sim_n, sim_seed, sim_predict);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mixshrink
