#pragma once

// Plain numeric CSV: a header row and comma-separated numbers, no quoting.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "boats/model_core.hpp"

namespace boats::cli {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Parses a double; accepts "nan", "inf" and "-inf" as written by format_double.
inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s == "nan") { out = std::nan(""); return true; }
  if (s == "inf") { out = INFINITY; return true; }
  if (s == "-inf") { out = -INFINITY; return true; }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty();
}

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline NumericTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  NumericTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (table.header.empty()) {
      for (auto f : fields) table.header.emplace_back(f);
      continue;
    }
    if (fields.size() != table.header.size())
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], row[c]) || !std::isfinite(row[c]))
        throw FormatError(path + ":" + std::to_string(line_no) + ": column '" + table.header[c] +
                          "' has non-numeric value '" + std::string(fields[c]) + "'");
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw FormatError(path + ": empty file");
  return table;
}

struct LoadedDataset {
  Dataset data;
  std::vector<std::string> feature_names;
};

/// Every column except `response` is a feature, in file order.
inline LoadedDataset load_dataset(const std::string& path, const std::string& response = "y") {
  const auto table = read_numeric_csv(path);
  std::size_t ycol = table.header.size();
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == response) ycol = c;
  if (ycol == table.header.size())
    throw FormatError(path + ": response column '" + response + "' not found");
  if (table.rows.empty()) throw FormatError(path + ": no data rows");

  const auto m = static_cast<Index>(table.rows.size());
  const auto d = static_cast<Index>(table.header.size() - 1);
  Matrix x(m, d);
  Vector y(m);
  LoadedDataset out;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (c != ycol) out.feature_names.push_back(table.header[c]);
  for (Index i = 0; i < m; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == ycol) y(i) = row[c];
      else x(i, j++) = row[c];
    }
  }
  out.data = Dataset(std::move(x), std::move(y));
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Header x0..x{d-1},y then one row per sample.
inline std::string dataset_csv(const Dataset& data) {
  std::ostringstream os;
  for (Index j = 0; j < data.features(); ++j) os << 'x' << j << ',';
  os << "y\n";
  for (Index i = 0; i < data.samples(); ++i) {
    for (Index j = 0; j < data.features(); ++j) os << format_double(data.inputs()(i, j)) << ',';
    os << format_double(data.outputs()(i)) << '\n';
  }
  return os.str();
}

inline std::string column_csv(const std::string& name, const Vector& v) {
  std::ostringstream os;
  os << name << '\n';
  for (Index i = 0; i < v.size(); ++i) os << format_double(v(i)) << '\n';
  return os.str();
}

inline Vector read_column(const std::string& path) {
  const auto table = read_numeric_csv(path);
  if (table.header.size() != 1) throw FormatError(path + ": expected a single column");
  Vector v(static_cast<Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) v(static_cast<Index>(i)) = table.rows[i][0];
  return v;
}

}  // namespace boats::cli
