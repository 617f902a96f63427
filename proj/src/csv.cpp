#include "mixshrink/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mixshrink {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<int>(c);
  return -1;
}

CsvTable parse_csv(std::istream& in, const std::string& origin) {
  CsvTable table;
  std::string line;
  long line_no = 0;

  if (!std::getline(in, line))
    throw ParseError(origin + ": empty file (header row required)", 1);
  ++line_no;
  table.header = split_line(strip_cr(line));
  if (table.header.empty())
    throw ParseError(origin + ": empty header row", line_no);

  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size())
      throw ParseError(origin + ":" + std::to_string(line_no) + ": row has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(table.header.size()),
                       line_no);
    table.rows.push_back(std::move(cells));
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_csv(in, path);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t c = 0; c < table.header.size(); ++c)
    out << (c ? "," : "") << table.header[c];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(out, table);
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

double parse_cell(const std::string& cell, const std::string& origin,
                  long line, const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError(origin + ":" + std::to_string(line) +
                         ": non-numeric cell '" + cell + "' in column '" +
                         column + "'",
                     line);
  return value;
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& origin,
                         const std::string& response,
                         const std::vector<std::string>& covariates,
                         bool intercept,
                         std::vector<std::string>* covariate_names) {
  const int y_col = table.column(response);
  if (y_col < 0)
    throw Error(origin + ": missing response column '" + response + "'");

  std::vector<int> x_cols;
  std::vector<std::string> x_names;
  if (covariates.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (static_cast<int>(c) == y_col) continue;
      x_cols.push_back(static_cast<int>(c));
      x_names.push_back(table.header[c]);
    }
  } else {
    for (const auto& name : covariates) {
      const int c = table.column(name);
      if (c < 0)
        throw Error(origin + ": missing covariate column '" + name + "'");
      if (c == y_col)
        throw Error(origin + ": column '" + name +
                    "' is both response and covariate");
      x_cols.push_back(c);
      x_names.push_back(name);
    }
  }
  if (x_cols.empty()) throw Error(origin + ": no covariate columns");

  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  const Eigen::Index p0 = static_cast<Eigen::Index>(x_cols.size());

  Dataset data;
  data.y.resize(n);
  data.X.resize(n, p0 + (intercept ? 1 : 0));
  if (intercept) data.X.col(0) = Vector::Ones(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const long line = static_cast<long>(i) + 2;  // header is line 1
    data.y[i] = parse_cell(table.rows[i][y_col], origin, line, response);
    for (Eigen::Index c = 0; c < p0; ++c)
      data.X(i, c + (intercept ? 1 : 0)) =
          parse_cell(table.rows[i][x_cols[c]], origin, line, x_names[c]);
  }

  if (covariate_names != nullptr) *covariate_names = std::move(x_names);
  data.validate();
  return data;
}

}  // namespace mixshrink
