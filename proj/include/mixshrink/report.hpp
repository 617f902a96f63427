#ifndef MIXSHRINK_REPORT_HPP
#define MIXSHRINK_REPORT_HPP

#include <json.hpp>
#include <string>
#include <vector>

#include "mixshrink/csv.hpp"
#include "mixshrink/evaluation.hpp"

namespace mixshrink {

// A scenario evaluated over a grid of collinearity levels; mirrors the
// bundled JSON spec files.
struct SimulationSpec {
  ScenarioSpec base;  // rho is taken from `rhos` per run
  std::vector<double> rhos;
};

nlohmann::json params_to_json(const MixtureParams& params);
MixtureParams params_from_json(const nlohmann::json& j,
                               const std::string& context);

// Parses and schema-checks an experiment spec document; all violations are
// reported together.
SimulationSpec simulation_spec_from_json(const nlohmann::json& j,
                                         const std::string& origin);
SimulationSpec load_simulation_spec(const std::string& path);

nlohmann::json fit_config_to_json(const FitConfig& config);
nlohmann::json fit_result_to_json(const FitResult& result,
                                  const FitConfig& config);

// One output row of a metric table, shaped like the published summaries.
struct TableRow {
  std::string method;
  std::string engine;
  std::string metric;
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_length = 0.0;
  int n = 0;
  double rho = 0.0;

  bool operator==(const TableRow&) const = default;
};

CsvTable table_from_rows(const std::vector<TableRow>& rows);
std::vector<TableRow> rows_from_table(const CsvTable& table,
                                      const std::string& origin);

// Expands one experiment result into per-metric rows.
std::vector<TableRow> rows_from_result(const ExperimentResult& result, int n,
                                       double rho);

}  // namespace mixshrink

#endif  // MIXSHRINK_REPORT_HPP
