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

#include "acueval/acu.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "acueval/correlate.hpp"

namespace acueval {

MatchDecision aggregate_matches(std::span<const MatchAnnotation> annotations) {
  if (annotations.empty()) {
    throw Error(Errc::kInvalidArgument, "no annotations to aggregate");
  }
  const auto& first = annotations.front();
  std::map<std::string, std::size_t> votes;
  for (const auto& [id, _] : first.labels) votes.emplace(id, 0);
  for (const auto& a : annotations) {
    if (a.labels.size() != votes.size() ||
        !std::all_of(a.labels.begin(), a.labels.end(),
                     [&](const auto& kv) { return votes.count(kv.first) > 0; })) {
      throw Error(Errc::kInconsistentCoverage,
                  fmt::format("annotations for ({}, {}) cover different ACU sets",
                              first.example_id, first.system));
    }
    for (const auto& [id, label] : a.labels) votes[id] += label == 1 ? 1 : 0;
  }

  MatchDecision d;
  d.example_id = first.example_id;
  d.system = first.system;
  d.total_acus = votes.size();
  for (const auto& [id, yes] : votes) {
    if (2 * yes > annotations.size()) d.matched_acu_ids.insert(id);
  }
  return d;
}

double acu_score(const MatchDecision& decision) {
  if (decision.total_acus == 0) {
    throw Error(Errc::kEmptyAcuSet,
                fmt::format("({}, {}) has no ACUs", decision.example_id, decision.system));
  }
  return static_cast<double>(decision.matched_acu_ids.size()) /
         static_cast<double>(decision.total_acus);
}

namespace {

using CellKey = std::pair<std::string, std::string>;

// Groups annotations by (example, system), remembering first-seen order.
std::vector<std::pair<CellKey, std::vector<MatchAnnotation>>> group_cells(
    std::span<const MatchAnnotation> annotations) {
  std::map<CellKey, std::size_t> index;
  std::vector<std::pair<CellKey, std::vector<MatchAnnotation>>> groups;
  for (const auto& a : annotations) {
    CellKey key{a.example_id, a.system};
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) groups.push_back({key, {}});
    groups[it->second].second.push_back(a);
  }
  return groups;
}

}  // namespace

std::vector<ScoredSummary> score_corpus(const Corpus& corpus) {
  std::map<CellKey, std::vector<MatchAnnotation>> by_cell;
  for (const auto& a : corpus.match_annotations) {
    by_cell[{a.example_id, a.system}].push_back(a);
  }
  std::vector<ScoredSummary> out;
  const auto systems = corpus.systems();
  for (const auto& e : corpus.examples) {
    const std::size_t ref_len = word_count(e.reference);
    for (const auto& s : systems) {
      auto it = by_cell.find({e.example_id, s});
      if (it == by_cell.end()) continue;
      const SystemOutput* o = corpus.find_output(e.example_id, s);
      ScoredSummary cell;
      cell.example_id = e.example_id;
      cell.system = s;
      cell.acu = acu_score(aggregate_matches(it->second));
      cell.cand_len = o ? word_count(o->summary) : 0;
      cell.ref_len = ref_len;
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<ScoredSummary> score_annotations(std::span<const MatchAnnotation> annotations) {
  std::vector<ScoredSummary> out;
  for (const auto& [key, group] : group_cells(annotations)) {
    ScoredSummary cell;
    cell.example_id = key.first;
    cell.system = key.second;
    cell.acu = acu_score(aggregate_matches(group));
    out.push_back(std::move(cell));
  }
  return out;
}

namespace {

ScoreMatrix matrix_from_cells(std::span<const ScoredSummary> cells,
                              const std::vector<std::string>& systems,
                              const std::vector<std::string>& example_ids,
                              double (*value)(const ScoredSummary&, double), double alpha) {
  std::map<CellKey, const ScoredSummary*> lookup;
  for (const auto& c : cells) lookup.emplace(CellKey{c.example_id, c.system}, &c);
  return build_score_matrix(
      [&](const std::string& ex, const std::string& sys) -> std::optional<double> {
        auto it = lookup.find({ex, sys});
        if (it == lookup.end()) return std::nullopt;
        return value(*it->second, alpha);
      },
      systems, example_ids);
}

}  // namespace

ScoreMatrix acu_matrix(std::span<const ScoredSummary> cells,
                       const std::vector<std::string>& systems,
                       const std::vector<std::string>& example_ids) {
  return matrix_from_cells(
      cells, systems, example_ids, [](const ScoredSummary& c, double) { return c.acu; }, 0.0);
}

ScoreMatrix normalized_acu_matrix(std::span<const ScoredSummary> cells, double alpha,
                                  const std::vector<std::string>& systems,
                                  const std::vector<std::string>& example_ids) {
  return matrix_from_cells(
      cells, systems, example_ids,
      [](const ScoredSummary& c, double a) {
        return normalized_acu_score(c.acu, c.cand_len, c.ref_len, a);
      },
      alpha);
}

std::vector<double> default_alpha_grid() {
  constexpr int kPoints = 25;
  constexpr double kLow = 0.25, kHigh = 10.0;
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    grid[static_cast<std::size_t>(i)] =
        kLow * std::pow(kHigh / kLow, static_cast<double>(i) / (kPoints - 1));
  }
  for (double anchor : {0.5, 2.0, 5.0}) {
    auto nearest = std::min_element(grid.begin(), grid.end(), [&](double a, double b) {
      return std::abs(std::log(a / anchor)) < std::abs(std::log(b / anchor));
    });
    *nearest = anchor;
  }
  return grid;
}

CalibrationResult calibrate_alpha(std::span<const ScoredSummary> cells,
                                  std::span<const double> grid) {
  if (grid.empty()) throw Error(Errc::kInvalidArgument, "alpha grid is empty");
  for (double a : grid) {
    if (!(a > 0)) throw Error(Errc::kInvalidAlpha, fmt::format("grid value {}", a));
  }

  // Rows: one per example with at least two systems.
  std::vector<std::vector<const ScoredSummary*>> rows;
  {
    std::unordered_map<std::string, std::size_t> row_of;
    for (const auto& c : cells) {
      auto [it, inserted] = row_of.emplace(c.example_id, rows.size());
      if (inserted) rows.emplace_back();
      rows[it->second].push_back(&c);
    }
  }
  std::erase_if(rows, [](const auto& r) { return r.size() < 2; });
  if (rows.size() < 2) {
    throw Error(Errc::kInsufficientData, "calibration needs two examples with two systems each");
  }

  bool any_length_variation = false;
  for (const auto& r : rows) {
    for (const auto* c : r) {
      if (c->ref_len == 0) throw Error(Errc::kZeroReferenceLength, "example " + c->example_id);
      if (c->cand_len != r.front()->cand_len) any_length_variation = true;
    }
  }
  if (!any_length_variation) {
    throw Error(Errc::kDegenerateLengths, "candidate lengths are constant within every example");
  }

  CalibrationResult result;
  bool have_best = false;
  for (double alpha : grid) {
    double total = 0.0;
    std::size_t used = 0;
    for (const auto& r : rows) {
      Eigen::VectorXd scores(static_cast<Eigen::Index>(r.size()));
      Eigen::VectorXd lengths(static_cast<Eigen::Index>(r.size()));
      for (std::size_t k = 0; k < r.size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        scores(idx) = normalized_acu_score(r[k]->acu, r[k]->cand_len, r[k]->ref_len, alpha);
        lengths(idx) = static_cast<double>(r[k]->cand_len);
      }
      if (auto c = corr_coeff(scores, lengths, CorrKind::kPearson)) {
        total += *c;
        ++used;
      }
    }
    if (used == 0) continue;
    const double corr = total / static_cast<double>(used);
    result.grid.emplace_back(alpha, corr);
    if (!have_best || std::abs(corr) < std::abs(result.residual_correlation)) {
      result.alpha = alpha;
      result.residual_correlation = corr;
      have_best = true;
    }
  }
  if (!have_best) {
    throw Error(Errc::kDegenerateLengths, "no example yields a defined length correlation");
  }
  return result;
}

CalibrationResult calibrate_alpha(const Corpus& corpus, std::span<const double> grid) {
  const auto cells = score_corpus(corpus);
  return calibrate_alpha(std::span<const ScoredSummary>(cells), grid);
}

}  // namespace acueval
