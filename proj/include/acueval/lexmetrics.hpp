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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace acueval {

struct TokenizeOptions {
  bool stem = false;  // Porter stemming of tokens longer than three characters
};

// Lowercases ASCII, splits on every non-alphanumeric byte, drops empties.
std::vector<std::string> tokenize(std::string_view text, const TokenizeOptions& opts = {});

// Classic Porter (1980) suffix stripper over lowercase ASCII words.
std::string porter_stem(std::string_view word);

// Recall/precision are absent for single-valued metrics (chrF, BLEU), which
// report their value in `f1`.
struct MetricScore {
  std::optional<double> recall;
  std::optional<double> precision;
  double f1 = 0.0;
};

enum class RougeVariant { kRouge1, kRouge2, kRougeL };

MetricScore rouge(std::string_view reference, std::string_view candidate, RougeVariant variant,
                  const TokenizeOptions& opts = {});

// Character n-gram F-beta (n = 1..6, beta = 2); whitespace is ignored.
double chrf(std::string_view reference, std::string_view candidate);

// Sentence BLEU-4 over tokenize()d text with add-one smoothing of zero
// n-gram matches and the standard brevity penalty.
double bleu(const std::vector<std::string>& references, std::string_view candidate);

struct ExtractiveStats {
  double coverage = 0.0;
  double density = 0.0;
  double compression = 0.0;
  std::map<int, double> novel_ngram_fraction;     // n -> fraction
  std::map<int, double> repeated_ngram_fraction;  // n -> fraction
};

// Greedy extractive fragments of `candidate` w.r.t. `source`, left to right.
// Fragment lengths, in candidate order.
std::vector<std::size_t> extractive_fragments(const std::vector<std::string>& source,
                                              const std::vector<std::string>& candidate);

ExtractiveStats extractive_stats(std::string_view source, std::string_view candidate);

}  // namespace acueval
