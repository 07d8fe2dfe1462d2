// Copyright 2026 The acueval Authors.
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

#include "acueval/score_matrix.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "csv.hpp"

namespace acueval {

ScoreMatrix align_to(const ScoreMatrix& m, const ScoreMatrix& like) {
  if (m.example_ids.size() != like.example_ids.size() ||
      m.systems.size() != like.systems.size()) {
    throw Error(Errc::kShapeMismatch, "score matrices differ in shape");
  }
  std::unordered_map<std::string, Eigen::Index> row_of, col_of;
  for (std::size_t i = 0; i < m.example_ids.size(); ++i)
    row_of.emplace(m.example_ids[i], static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < m.systems.size(); ++j)
    col_of.emplace(m.systems[j], static_cast<Eigen::Index>(j));

  ScoreMatrix out;
  out.example_ids = like.example_ids;
  out.systems = like.systems;
  out.values.resize(like.rows(), like.cols());
  for (Eigen::Index i = 0; i < like.rows(); ++i) {
    auto r = row_of.find(like.example_ids[static_cast<std::size_t>(i)]);
    if (r == row_of.end()) {
      throw Error(Errc::kShapeMismatch,
                  "missing example " + like.example_ids[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index j = 0; j < like.cols(); ++j) {
      auto c = col_of.find(like.systems[static_cast<std::size_t>(j)]);
      if (c == col_of.end()) {
        throw Error(Errc::kShapeMismatch,
                    "missing system " + like.systems[static_cast<std::size_t>(j)]);
      }
      out.values(i, j) = m.values(r->second, c->second);
    }
  }
  return out;
}

ScoreMatrix read_score_matrix_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::string> rows;
  std::vector<std::vector<double>> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = detail::split_csv_line(line);
    if (header.empty()) {
      if (fields.size() < 2 || fields.front() != "example_id") {
        throw Error(Errc::kMalformedRecord,
                    fmt::format("line {}: expected header `example_id,<system>,...`", line_no));
      }
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(Errc::kMalformedRecord,
                  fmt::format("line {}: expected {} fields, got {}", line_no,
                              header.size(), fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      auto v = detail::parse_double(fields[k]);
      if (!v) {
        throw Error(Errc::kMalformedRecord,
                    fmt::format("line {}: non-numeric value `{}`", line_no, fields[k]));
      }
      row.push_back(*v);
    }
    rows.push_back(fields.front());
    cells.push_back(std::move(row));
  }
  if (header.empty()) throw Error(Errc::kMalformedRecord, "missing CSV header");

  ScoreMatrix m;
  m.example_ids = std::move(rows);
  m.systems.assign(header.begin() + 1, header.end());
  m.values.resize(static_cast<Eigen::Index>(cells.size()),
                  static_cast<Eigen::Index>(m.systems.size()));
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells[i].size(); ++j)
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i][j];
  return m;
}

ScoreMatrix read_score_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  try {
    return read_score_matrix_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_score_matrix_csv(std::ostream& out, const ScoreMatrix& m) {
  out << "example_id";
  for (const auto& s : m.systems) out << ',' << detail::quote_csv(s);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << detail::quote_csv(m.example_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << fmt::format("{}", m.values(i, j));
    out << '\n';
  }
}

}  // namespace acueval
