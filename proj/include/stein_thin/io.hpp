// Copyright 2026 The stein_thin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stein_thin/chain.hpp"
#include "stein_thin/error.hpp"
#include "stein_thin/types.hpp"

// Chain files are CSV with header x1..xd,g1..gd[,logp]: states, gradients
// of log p at those states, and optionally the unnormalised log-density.
// Lines starting with '#' are comments. Index files hold 0-based row
// indices in their first column.

namespace stein_thin::io {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool skippable(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

inline double parse_double(std::string_view field, std::size_t line) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    if (res.ec == std::errc::result_out_of_range) throw ParseError(line, "number out of range '" + std::string(field) + "'");
    throw ParseError(line, "cannot parse number '" + std::string(field) + "'");
  }
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

// Returns the header fields and the 1-based line number of the header.
inline std::pair<std::vector<std::string>, std::size_t> read_header(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::vector<std::string> out;
    for (auto f : split(line)) out.emplace_back(f);
    return {out, lineno};
  }
  throw SchemaError(0, "file is empty");
}

}  // namespace detail

struct ChainFileInfo {
  Index dimension = 0;
  bool has_log_density = false;
  Index rows = 0;
};

/// Header validation: x1..xd, g1..gd and an optional trailing logp.
inline ChainFileInfo parse_chain_header(const std::vector<std::string>& fields, std::size_t lineno) {
  const std::size_t count = fields.size();
  ChainFileInfo info;
  info.has_log_density = count % 2 == 1 && fields.back() == "logp";
  const std::size_t paired = info.has_log_density ? count - 1 : count;
  if (paired == 0 || paired % 2 != 0) {
    throw SchemaError(lineno, "header must be x1..xd,g1..gd[,logp]");
  }
  info.dimension = static_cast<Index>(paired / 2);
  for (Index i = 0; i < info.dimension; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (fields[k] != "x" + std::to_string(i + 1) ||
        fields[k + static_cast<std::size_t>(info.dimension)] != "g" + std::to_string(i + 1)) {
      throw SchemaError(lineno, "header must be x1..xd,g1..gd[,logp]");
    }
  }
  return info;
}

/// Reads and validates a chain file in two passes (shape, then values).
inline Chain read_chain(const std::string& path, ChainFileInfo* info_out = nullptr) {
  ChainFileInfo info;
  std::size_t header_line = 0;
  {
    auto in = detail::open_input(path);
    auto [fields, lineno] = detail::read_header(in);
    info = parse_chain_header(fields, lineno);
    header_line = lineno;
    const std::size_t expected = 2 * static_cast<std::size_t>(info.dimension) + (info.has_log_density ? 1 : 0);
    std::string line;
    std::size_t n = lineno;
    while (std::getline(in, line)) {
      ++n;
      if (detail::skippable(line)) continue;
      const std::size_t fields_here = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
      if (fields_here != expected) {
        throw SchemaError(n, "expected " + std::to_string(expected) + " fields, found " + std::to_string(fields_here));
      }
      ++info.rows;
    }
  }
  if (info.rows == 0) throw SchemaError(0, "chain file '" + path + "' has no data rows");

  const Index d = info.dimension;
  RowMatrix x(info.rows, d);
  RowMatrix g(info.rows, d);
  std::optional<Vector> lp;
  if (info.has_log_density) lp = Vector(info.rows);
  auto in = detail::open_input(path);
  std::string line;
  std::size_t lineno = 0;
  Index r = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno <= header_line || detail::skippable(line)) continue;
    const auto fields = detail::split(line);
    for (Index j = 0; j < d; ++j) {
      const double xv = detail::parse_double(fields[static_cast<std::size_t>(j)], lineno);
      const double gv = detail::parse_double(fields[static_cast<std::size_t>(j + d)], lineno);
      if (!std::isfinite(xv) || !std::isfinite(gv)) throw SchemaError(lineno, "non-finite state or gradient");
      x(r, j) = xv;
      g(r, j) = gv;
    }
    if (lp) {
      const double v = detail::parse_double(fields.back(), lineno);
      if (!std::isfinite(v)) throw SchemaError(lineno, "non-finite log-density");
      (*lp)(r) = v;
    }
    ++r;
  }
  if (info_out) *info_out = info;
  return Chain(std::move(x), std::move(g), std::move(lp));
}

inline void write_chain(std::ostream& out, const Chain& chain) {
  const Index d = chain.dimension();
  for (Index j = 0; j < d; ++j) out << (j ? "," : "") << 'x' << j + 1;
  for (Index j = 0; j < d; ++j) out << ",g" << j + 1;
  if (chain.has_log_density()) out << ",logp";
  out << '\n';
  for (Index i = 0; i < chain.size(); ++i) {
    for (Index j = 0; j < d; ++j) out << (j ? "," : "") << format_double(chain.samples()(i, j));
    for (Index j = 0; j < d; ++j) out << ',' << format_double(chain.gradients()(i, j));
    if (chain.has_log_density()) out << ',' << format_double((*chain.log_densities())(i));
    out << '\n';
  }
}

inline void write_chain(const std::string& path, const Chain& chain) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_chain(out, chain);
}

/// States from a CSV file: the x1..xd columns when the header names them
/// (so chain files work), otherwise every column.
inline RowMatrix read_points(const std::string& path) {
  auto in = detail::open_input(path);
  auto [header, header_line] = detail::read_header(in);
  std::vector<std::size_t> cols;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "x" + std::to_string(cols.size() + 1)) cols.push_back(k);
  }
  if (cols.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k) cols.push_back(k);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = header_line;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const auto fields = detail::split(line);
    if (fields.size() != header.size()) {
      throw SchemaError(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (auto k : cols) {
      const double v = detail::parse_double(fields[k], lineno);
      if (!std::isfinite(v)) throw SchemaError(lineno, "non-finite value");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError(0, "'" + path + "' has no data rows");
  RowMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return out;
}

/// Square matrix from a headerless CSV file (one row per line).
inline Matrix read_matrix(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    std::vector<double> row;
    for (auto f : detail::split(line)) row.push_back(detail::parse_double(f, lineno));
    if (!rows.empty() && row.size() != rows.front().size()) throw SchemaError(lineno, "ragged matrix row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError(0, "'" + path + "' is empty");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

/// First column of an index file, skipping the header and comments.
inline std::vector<Index> read_indices(const std::string& path) {
  auto in = detail::open_input(path);
  auto [header, header_line] = detail::read_header(in);
  if (header.empty() || header.front() != "index") throw SchemaError(header_line, "index file must start with an 'index' column");
  std::vector<Index> out;
  std::string line;
  std::size_t lineno = header_line;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const auto field = detail::split(line).front();
    long long v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || v < 0) {
      throw ParseError(lineno, "invalid index '" + std::string(field) + "'");
    }
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

}  // namespace stein_thin::io
