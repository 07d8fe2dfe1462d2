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

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acueval/error.hpp"

namespace acueval {

// An n-example x m-system grid of scores. Rows follow `example_ids`,
// columns follow `systems`; every cell is populated.
template <typename Scalar>
struct BasicScoreMatrix {
  using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::vector<std::string> example_ids;
  std::vector<std::string> systems;
  Values values;

  BasicScoreMatrix() = default;
  BasicScoreMatrix(std::vector<std::string> rows, std::vector<std::string> cols,
                   Values v)
      : example_ids(std::move(rows)), systems(std::move(cols)),
        values(std::move(v)) {
    if (values.rows() != static_cast<Eigen::Index>(example_ids.size()) ||
        values.cols() != static_cast<Eigen::Index>(systems.size())) {
      throw Error(Errc::kShapeMismatch,
                  "value grid does not match row/column labels");
    }
  }

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  // Per-system means over examples.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> column_means() const {
    return values.colwise().mean().transpose();
  }

  std::optional<Eigen::Index> column_of(const std::string& system) const {
    for (std::size_t j = 0; j < systems.size(); ++j) {
      if (systems[j] == system) return static_cast<Eigen::Index>(j);
    }
    return std::nullopt;
  }

  // Keeps only the given rows (by index, repeats allowed) in that order.
  BasicScoreMatrix select_rows(const std::vector<Eigen::Index>& idx) const {
    BasicScoreMatrix out;
    out.systems = systems;
    out.values.resize(static_cast<Eigen::Index>(idx.size()), cols());
    out.example_ids.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.values.row(static_cast<Eigen::Index>(k)) = values.row(idx[k]);
      out.example_ids.push_back(example_ids[static_cast<std::size_t>(idx[k])]);
    }
    return out;
  }

  friend bool operator==(const BasicScoreMatrix& a, const BasicScoreMatrix& b) {
    return a.example_ids == b.example_ids && a.systems == b.systems &&
           a.values.rows() == b.values.rows() &&
           a.values.cols() == b.values.cols() && a.values == b.values;
  }
};

using ScoreMatrix = BasicScoreMatrix<double>;

// Throws ShapeMismatch unless both matrices carry identical labels in the
// same order.
template <typename Scalar>
void require_same_keys(const BasicScoreMatrix<Scalar>& a,
                       const BasicScoreMatrix<Scalar>& b) {
  if (a.example_ids != b.example_ids || a.systems != b.systems) {
    throw Error(Errc::kShapeMismatch,
                "score matrices differ in example or system keys");
  }
}

// Reorders `m` to the row/column order of `like`, which must hold the same
// key sets.
ScoreMatrix align_to(const ScoreMatrix& m, const ScoreMatrix& like);

// CSV: header `example_id,<sys1>,...` then one numeric row per example.
// Lines starting with '#' are metadata and skipped on read.
ScoreMatrix read_score_matrix_csv(std::istream& in);
ScoreMatrix read_score_matrix_csv(const std::string& path);
void write_score_matrix_csv(std::ostream& out, const ScoreMatrix& m);

}  // namespace acueval
