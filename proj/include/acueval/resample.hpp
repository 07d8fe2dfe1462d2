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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acueval/correlate.hpp"
#include "acueval/score_matrix.hpp"

namespace acueval {

struct ResampleConfig {
  std::uint64_t seed = 0;
  std::size_t trials = 1000;       // power-analysis trials (m)
  std::size_t resamples = 1000;    // bootstrap / permutation draws (B)
  double alpha_level = 0.05;
  std::size_t sample_size = 100;   // examples drawn per power trial (n)
  unsigned threads = 0;            // 0 = hardware concurrency

  void validate() const;
};

struct PowerResult {
  double power = 0.0;
  ResampleConfig config;
  std::vector<double> trial_p_values;
};

struct IntervalResult {
  double point = 0.0;
  double low = 0.0;
  double high = 0.0;
  double level = 0.95;
};

// One-sided paired bootstrap. The better system is whichever has the higher
// observed mean; p is the fraction of resamples in which it fails to beat
// the other (mean difference <= 0). Swapping a and b gives the same p.
double paired_bootstrap_test(std::span<const double> a, std::span<const double> b,
                             const ResampleConfig& cfg);

// Same test with the direction fixed by the caller: `diffs` are
// better-minus-worse per example.
double directed_bootstrap_pvalue(std::span<const double> diffs, const ResampleConfig& cfg);

// Bootstrap power: each trial draws cfg.sample_size aligned examples with
// replacement and tests them; power is the fraction of trials with
// p < cfg.alpha_level. The tested direction is the one the full data favours.
PowerResult power_analysis(std::span<const double> scores_a, std::span<const double> scores_b,
                           const ResampleConfig& cfg);

// Two-sided paired permutation test for the difference of two metrics'
// correlations with human scores. Each permutation swaps the metrics' values
// cell by cell with probability 1/2.
double permutation_metric_test(const ScoreMatrix& metric_x, const ScoreMatrix& metric_y,
                               const ScoreMatrix& human, CorrKind kind, CorrLevel level,
                               const ResampleConfig& cfg);

// Percentile bootstrap interval over example rows at level 1 - alpha_level.
IntervalResult bootstrap_ci(const ScoreMatrix& metric, const ScoreMatrix& human, CorrKind kind,
                            CorrLevel level, const ResampleConfig& cfg);

enum class AgreementScale { kNominal, kInterval };

// Krippendorff's alpha from per-unit value lists (one entry per rating;
// units with fewer than two ratings are unpairable and ignored).
double krippendorff_alpha(const std::vector<std::vector<double>>& units, AgreementScale scale);

struct Rating {
  std::string item;
  std::string rater;
  double value = 0.0;
};

double krippendorff_alpha(std::span<const Rating> ratings, AgreementScale scale);

}  // namespace acueval
