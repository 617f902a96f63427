#ifndef MIXSHRINK_CSV_HPP
#define MIXSHRINK_CSV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "mixshrink/types.hpp"

namespace mixshrink {

// Comma-delimited table with a mandatory header row. Cells are kept as
// strings; numeric conversion happens where a number is required so parse
// errors can name the exact line and column.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable parse_csv(std::istream& in, const std::string& origin);
CsvTable read_csv(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

// 17 significant digits; round-trips doubles exactly.
std::string format_double(double value);

// Parses a cell as double; throws ParseError naming origin/line/column.
double parse_cell(const std::string& cell, const std::string& origin,
                  long line, const std::string& column);

// Builds a dataset from a CSV table: `response` selects the response column,
// `covariates` restricts the covariate columns (empty = all remaining), and
// a leading intercept column is added when requested.
Dataset dataset_from_csv(const CsvTable& table, const std::string& origin,
                         const std::string& response,
                         const std::vector<std::string>& covariates,
                         bool intercept,
                         std::vector<std::string>* covariate_names = nullptr);

}  // namespace mixshrink

#endif  // MIXSHRINK_CSV_HPP
