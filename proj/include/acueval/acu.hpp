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

#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acueval/corpus.hpp"
#include "acueval/error.hpp"

namespace acueval {

struct MatchDecision {
  std::string example_id;
  std::string system;
  std::set<std::string> matched_acu_ids;
  std::size_t total_acus = 0;
};

struct CalibrationResult {
  double alpha = 0.0;
  double residual_correlation = 0.0;
  std::vector<std::pair<double, double>> grid;  // (alpha, summary-level r)
};

// Per-ACU strict-majority vote over workers; ties resolve to unmatched.
MatchDecision aggregate_matches(std::span<const MatchAnnotation> annotations);

// |matched| / |ACUs|.
double acu_score(const MatchDecision& decision);

// Length-penalised ACU score:
//   f~ = exp(min(0, (1 - cand_len / ref_len) / alpha)) * f
// Candidates no longer than the reference are not penalised.
template <typename Scalar>
Scalar normalized_acu_score(Scalar f, std::size_t cand_len, std::size_t ref_len,
                            Scalar alpha) {
  if (!(alpha > Scalar(0))) throw Error(Errc::kInvalidAlpha, "alpha must be positive");
  if (ref_len == 0) throw Error(Errc::kZeroReferenceLength, "reference has no words");
  const Scalar ratio = static_cast<Scalar>(cand_len) / static_cast<Scalar>(ref_len);
  const Scalar exponent = std::min(Scalar(0), (Scalar(1) - ratio) / alpha);
  return std::exp(exponent) * f;
}

// One aggregated ACU judgement with the lengths needed for normalisation.
struct ScoredSummary {
  std::string example_id;
  std::string system;
  double acu = 0.0;
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
};

// Aggregates every annotated (example, system) cell of `corpus`. Cells are
// returned in example order, then system order of first appearance.
std::vector<ScoredSummary> score_corpus(const Corpus& corpus);

// ACU scores computed from annotations alone (no examples file): each
// annotation's labels define the ACU set of its cell.
std::vector<ScoredSummary> score_annotations(std::span<const MatchAnnotation> annotations);

// Matrices over the given cells; IncompleteGrid if a cell is missing.
ScoreMatrix acu_matrix(std::span<const ScoredSummary> cells,
                       const std::vector<std::string>& systems,
                       const std::vector<std::string>& example_ids);
ScoreMatrix normalized_acu_matrix(std::span<const ScoredSummary> cells, double alpha,
                                  const std::vector<std::string>& systems,
                                  const std::vector<std::string>& example_ids);

// 25 log-spaced points over [0.25, 10] with the points nearest 0.5, 2 and 5
// snapped to those values.
std::vector<double> default_alpha_grid();

// Picks the grid alpha minimising |summary-level Pearson(f~, length)|.
// Examples with fewer than two systems, or with constant lengths or scores,
// contribute no row.
CalibrationResult calibrate_alpha(std::span<const ScoredSummary> cells,
                                  std::span<const double> grid);
CalibrationResult calibrate_alpha(const Corpus& corpus, std::span<const double> grid);

}  // namespace acueval
