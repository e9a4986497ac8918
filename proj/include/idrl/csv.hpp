#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "idrl/dataset.hpp"
#include "idrl/errors.hpp"

namespace idrl {

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
      field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && field[start] == ' ') ++start;
    fields.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError("non-numeric cell at row " + std::to_string(row) +
                     ", column " + std::to_string(col + 1) + ": '" + cell + "'");
  return value;
}

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

// Dataset interchange CSV. Header row is required; columns are mapped by
// name: `t` and `y_f` must exist, `y_cf`, `mu0`, `mu1`, `e` are optional, and
// every remaining column must be named `x*` and becomes a covariate in
// header order.
inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty dataset file: " + path);
  std::vector<std::string> header = detail::split_line(line);

  long t_col = -1, yf_col = -1, ycf_col = -1, mu0_col = -1, mu1_col = -1, e_col = -1;
  std::vector<long> x_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "t") t_col = static_cast<long>(c);
    else if (name == "y_f") yf_col = static_cast<long>(c);
    else if (name == "y_cf") ycf_col = static_cast<long>(c);
    else if (name == "mu0") mu0_col = static_cast<long>(c);
    else if (name == "mu1") mu1_col = static_cast<long>(c);
    else if (name == "e") e_col = static_cast<long>(c);
    else if (!name.empty() && name[0] == 'x') x_cols.push_back(static_cast<long>(c));
    else throw SchemaError("unrecognized column '" + name + "' in " + path);
  }
  if (t_col < 0) throw SchemaError("missing required column 't' in " + path);
  if (yf_col < 0) throw SchemaError("missing required column 'y_f' in " + path);

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = detail::split_line(line);
    if (cells.size() != header.size())
      throw ParseError("row " + std::to_string(row_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      values[c] = detail::parse_cell(cells[c], row_no, c);
    rows.push_back(std::move(values));
  }

  const std::size_t n = rows.size();
  Dataset ds;
  ds.X = Matrix(n, x_cols.size());
  ds.t.resize(n);
  ds.y_f.resize(n);
  if (ycf_col >= 0) ds.y_cf = std::vector<double>(n);
  if (mu0_col >= 0) ds.mu0 = std::vector<double>(n);
  if (mu1_col >= 0) ds.mu1 = std::vector<double>(n);
  if (e_col >= 0) ds.e_flag = std::vector<int>(n);

  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& row = rows[i];
    double traw = row[static_cast<std::size_t>(t_col)];
    if (traw != 0.0 && traw != 1.0)
      throw ParseError("treatment must be 0/1 at row " + std::to_string(i + 2));
    ds.t[i] = static_cast<int>(traw);
    ds.y_f[i] = row[static_cast<std::size_t>(yf_col)];
    if (ycf_col >= 0) (*ds.y_cf)[i] = row[static_cast<std::size_t>(ycf_col)];
    if (mu0_col >= 0) (*ds.mu0)[i] = row[static_cast<std::size_t>(mu0_col)];
    if (mu1_col >= 0) (*ds.mu1)[i] = row[static_cast<std::size_t>(mu1_col)];
    if (e_col >= 0) {
      double eraw = row[static_cast<std::size_t>(e_col)];
      if (eraw != 0.0 && eraw != 1.0)
        throw ParseError("e flag must be 0/1 at row " + std::to_string(i + 2));
      (*ds.e_flag)[i] = static_cast<int>(eraw);
    }
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      ds.X(i, j) = row[static_cast<std::size_t>(x_cols[j])];
  }
  ds.validate();
  return ds;
}

// Writes `t,y_f[,y_cf][,mu0][,mu1][,e],x1..xd`; doubles use the shortest
// exact representation so a round trip is bit-identical.
inline void save_dataset_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write dataset file: " + path);
  out << "t,y_f";
  if (ds.y_cf) out << ",y_cf";
  if (ds.mu0) out << ",mu0";
  if (ds.mu1) out << ",mu1";
  if (ds.e_flag) out << ",e";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ",x" << (j + 1);
  out << "\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out << ds.t[i] << ',' << detail::format_double(ds.y_f[i]);
    if (ds.y_cf) out << ',' << detail::format_double((*ds.y_cf)[i]);
    if (ds.mu0) out << ',' << detail::format_double((*ds.mu0)[i]);
    if (ds.mu1) out << ',' << detail::format_double((*ds.mu1)[i]);
    if (ds.e_flag) out << ',' << (*ds.e_flag)[i];
    for (std::size_t j = 0; j < ds.dim(); ++j)
      out << ',' << detail::format_double(ds.X(i, j));
    out << "\n";
  }
}

}  // namespace idrl
