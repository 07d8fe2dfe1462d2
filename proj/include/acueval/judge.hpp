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

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acueval/corpus.hpp"
#include "acueval/error.hpp"
#include "acueval/score_matrix.hpp"

namespace acueval {

struct JudgeConfig {
  // Base URL of an OpenAI-compatible API, e.g. "https://api.openai.com/v1".
  // Completions go to <endpoint>/completions, chat to <endpoint>/chat/completions.
  std::string endpoint;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  std::size_t samples = 1;
  std::size_t max_in_flight = 4;
  std::filesystem::path cache_dir;  // empty disables caching
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};

  void validate() const;
};

struct JudgeRecord {
  std::string cache_key;
  std::string rendered_prompt;
  std::string raw_response;
  double parsed_score = 0.0;
  std::string timestamp;
};

// Prompt texts for reference-based recall judging.
std::string render_gptscore_prompt(std::string_view reference, std::string_view candidate);
std::string render_geval_prompt(std::string_view reference, std::string_view candidate);

// First standalone integer in [1,5]: a digit run not touching letters,
// digits, '-' or '.', so scale markers like "(1-5)" and decimals are skipped.
std::optional<int> parse_geval_score(std::string_view reply);

// Hex SHA-256 over the length-prefixed (model, prompt, temperature, sample).
std::string judge_cache_key(std::string_view model, std::string_view prompt, double temperature,
                            std::size_t sample_index);

// Request counters shared by concurrent calls.
struct JudgeStats {
  std::atomic<std::size_t> network_calls{0};
  std::atomic<std::size_t> cache_hits{0};
};

class JudgeClient {
 public:
  explicit JudgeClient(JudgeConfig cfg, JudgeStats* stats = nullptr);

  // exp(log-probability of the final "Yes" token of the echoed prompt).
  double gptscore_recall(std::string_view reference, std::string_view candidate);

  // Mean of cfg.samples parsed 1-5 ratings (one when greedy).
  double geval_recall(std::string_view reference, std::string_view candidate);

  const JudgeConfig& config() const { return cfg_; }

 private:
  enum class Route { kCompletions, kChat };

  JudgeRecord fetch(Route route, const std::string& prompt, std::size_t sample_index,
                    double (*parse)(const std::string& body));
  std::string post_with_retries(Route route, const std::string& body);
  std::optional<JudgeRecord> load_cached(const std::string& key) const;
  void store(const JudgeRecord& record) const;

  JudgeConfig cfg_;
  JudgeStats* stats_;
};

double gptscore_recall(std::string_view reference, std::string_view candidate,
                       const JudgeConfig& cfg);
double geval_recall(std::string_view reference, std::string_view candidate,
                    const JudgeConfig& cfg);

enum class Evaluator { kGptScore, kGevalGreedy, kGevalSampled };

std::string_view to_string(Evaluator e);
std::optional<Evaluator> parse_evaluator(std::string_view s);

// `cfg` with the temperature/sample settings the evaluator prescribes:
// greedy uses (0, 1), sampled uses (1, 5), GPTScore uses (0, 1).
JudgeConfig config_for(Evaluator e, JudgeConfig cfg);

struct CellFailure {
  std::string example_id;
  std::string system;
  std::string message;
};

class BatchError : public Error {
 public:
  explicit BatchError(std::vector<CellFailure> failures);
  const std::vector<CellFailure>& failures() const { return failures_; }

 private:
  std::vector<CellFailure> failures_;
};

// Judges every (example, system) output of the corpus against the example's
// reference. Completed cells are cached, so an interrupted batch resumes
// where it stopped. Throws BatchError listing every failed cell.
ScoreMatrix run_judge_batch(const Corpus& corpus, Evaluator evaluator, const JudgeConfig& cfg,
                            JudgeStats* stats = nullptr);

}  // namespace acueval
