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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acueval/score_matrix.hpp"

namespace acueval {

struct Acu {
  std::string acu_id;
  std::string text;

  friend bool operator==(const Acu&, const Acu&) = default;
};

struct Example {
  std::string example_id;
  std::string reference;
  std::vector<Acu> acus;
  std::optional<std::string> source;

  friend bool operator==(const Example&, const Example&) = default;
};

struct SystemOutput {
  std::string system;
  std::string example_id;
  std::string summary;

  friend bool operator==(const SystemOutput&, const SystemOutput&) = default;
};

struct MatchAnnotation {
  std::string example_id;
  std::string system;
  std::string worker_id;
  std::map<std::string, int> labels;  // acu_id -> 0|1

  friend bool operator==(const MatchAnnotation&,
                         const MatchAnnotation&) = default;
};

enum class LikertProtocol { kPrior, kRefFree, kRefBased };

std::string_view to_string(LikertProtocol p);
std::optional<LikertProtocol> parse_likert_protocol(std::string_view s);

struct LikertAnnotation {
  std::string example_id;
  std::string system;
  std::string worker_id;
  LikertProtocol protocol = LikertProtocol::kPrior;
  int score = 1;

  friend bool operator==(const LikertAnnotation&,
                         const LikertAnnotation&) = default;
};

struct CorpusCounts {
  std::size_t examples = 0;
  std::size_t systems = 0;
  std::size_t outputs = 0;
  std::size_t match_annotations = 0;
  std::size_t likert_annotations = 0;
  std::size_t metric_matrices = 0;

  friend bool operator==(const CorpusCounts&, const CorpusCounts&) = default;
};

// Immutable after loading; all lookups are read-only.
class Corpus {
 public:
  std::vector<Example> examples;
  std::vector<SystemOutput> outputs;
  std::vector<MatchAnnotation> match_annotations;
  std::vector<LikertAnnotation> likert_annotations;
  std::map<std::string, ScoreMatrix> external_metric_scores;

  CorpusCounts counts() const;

  // Systems in order of first appearance among outputs.
  std::vector<std::string> systems() const;
  std::vector<std::string> example_ids() const;

  const Example* find_example(const std::string& example_id) const;
  const SystemOutput* find_output(const std::string& example_id,
                                  const std::string& system) const;

  // Annotations for one (example, system) cell, in file order.
  std::vector<MatchAnnotation> annotations_for(const std::string& example_id,
                                               const std::string& system) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.examples == b.examples && a.outputs == b.outputs &&
           a.match_annotations == b.match_annotations &&
           a.likert_annotations == b.likert_annotations &&
           a.external_metric_scores == b.external_metric_scores;
  }
};

struct BenchmarkPaths {
  std::optional<std::filesystem::path> examples;
  std::optional<std::filesystem::path> outputs;
  std::optional<std::filesystem::path> acu_annotations;
  std::optional<std::filesystem::path> likert_annotations;
  std::map<std::string, std::filesystem::path> metric_scores;
};

struct LoadOptions {
  // Drop offending records instead of failing; each drop is reported.
  bool lenient = false;
  std::function<void(const std::string&)> on_drop;
};

// Reads and validates every file named in `paths`. Referential integrity is
// only checked against collections that were loaded.
Corpus load_benchmark(const BenchmarkPaths& paths, const LoadOptions& opts = {});

// Writes the JSONL/CSV files named in `paths` for the populated collections.
void write_benchmark(const Corpus& corpus, const BenchmarkPaths& paths);

// Standalone readers, used when a pipeline stage needs only one file.
std::vector<MatchAnnotation> read_match_annotations(
    const std::filesystem::path& path);
std::vector<LikertAnnotation> read_likert_annotations(
    const std::filesystem::path& path);

using CellScorer = std::function<std::optional<double>(
    const std::string& example_id, const std::string& system)>;

// Dense matrix in the requested order; IncompleteGrid names the first cell
// (row-major) for which `scorer` yields nothing.
ScoreMatrix build_score_matrix(const CellScorer& scorer,
                               const std::vector<std::string>& systems,
                               const std::vector<std::string>& example_ids);

// Number of whitespace-delimited tokens.
std::size_t word_count(std::string_view text);

}  // namespace acueval
