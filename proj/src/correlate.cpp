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

#include "acueval/correlate.hpp"

#include <fmt/format.h>

namespace acueval {

std::string_view to_string(CorrKind kind) {
  switch (kind) {
    case CorrKind::kPearson: return "pearson";
    case CorrKind::kSpearman: return "spearman";
    case CorrKind::kKendall: return "kendall";
  }
  return "?";
}

std::optional<CorrKind> parse_corr_kind(std::string_view s) {
  if (s == "pearson") return CorrKind::kPearson;
  if (s == "spearman") return CorrKind::kSpearman;
  if (s == "kendall") return CorrKind::kKendall;
  return std::nullopt;
}

std::string_view to_string(CorrLevel level) {
  return level == CorrLevel::kSystem ? "sys" : "sum";
}

std::optional<CorrLevel> parse_corr_level(std::string_view s) {
  if (s == "sys") return CorrLevel::kSystem;
  if (s == "sum") return CorrLevel::kSummary;
  return std::nullopt;
}

SummaryLevelResult summary_level(const ScoreMatrix& x, const ScoreMatrix& y, CorrKind kind) {
  require_same_keys(x, y);
  SummaryLevelResult out;
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (auto r = corr_coeff(x.values.row(i), y.values.row(i), kind)) {
      total += *r;
      ++out.used_rows;
    } else {
      ++out.skipped_rows;
    }
  }
  if (out.used_rows == 0) {
    throw Error(Errc::kAllRowsDegenerate, "every row has zero variance on one side");
  }
  out.value = total / static_cast<double>(out.used_rows);
  return out;
}

double system_level(const ScoreMatrix& x, const ScoreMatrix& y, CorrKind kind) {
  require_same_keys(x, y);
  if (x.cols() < 2) throw Error(Errc::kShapeMismatch, "system level needs at least two systems");
  auto r = corr_coeff(x.column_means(), y.column_means(), kind);
  if (!r) throw Error(Errc::kDegenerate, "system means have zero variance");
  return *r;
}

std::optional<double> correlation_at(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                     CorrKind kind, CorrLevel level) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw Error(Errc::kShapeMismatch, "value grids differ in shape");
  }
  if (level == CorrLevel::kSystem) {
    return corr_coeff(x.colwise().mean(), y.colwise().mean(), kind);
  }
  double total = 0.0;
  std::size_t used = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (auto r = corr_coeff(x.row(i), y.row(i), kind)) {
      total += *r;
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return total / static_cast<double>(used);
}

std::optional<double> correlation_at(const ScoreMatrix& x, const ScoreMatrix& y,
                                     CorrKind kind, CorrLevel level) {
  require_same_keys(x, y);
  return correlation_at(x.values, y.values, kind, level);
}

std::vector<std::pair<std::string, double>> system_means(const ScoreMatrix& m) {
  const Eigen::VectorXd means = m.column_means();
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j = 0; j < m.systems.size(); ++j) {
    out.emplace_back(m.systems[j], means(static_cast<Eigen::Index>(j)));
  }
  return out;
}

std::vector<SystemPairBucket> make_buckets(
    const std::vector<std::pair<std::string, double>>& system_scores, std::size_t k) {
  const std::size_t m = system_scores.size();
  if (m < 2) throw Error(Errc::kInvalidArgument, "need at least two systems");
  if (k < 1) throw Error(Errc::kInvalidArgument, "bucket count must be positive");
  const std::size_t total = m * (m - 1) / 2;
  if (k > total) {
    throw Error(Errc::kTooManyBuckets,
                fmt::format("{} buckets requested for {} system pairs", k, total));
  }

  struct Pair {
    std::size_t a, b;
    double diff;
  };
  std::vector<Pair> pairs;
  pairs.reserve(total);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      pairs.push_back({i, j, std::abs(system_scores[i].second - system_scores[j].second)});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& x, const Pair& y) { return x.diff < y.diff; });

  const std::size_t base = total / k;
  const std::size_t extra = total % k;
  std::vector<SystemPairBucket> buckets;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t size = base + (b >= k - extra ? 1 : 0);
    SystemPairBucket bucket;
    bucket.bucket_index = b + 1;
    bucket.effect_range = {pairs[pos].diff, pairs[pos + size - 1].diff};
    for (std::size_t q = pos; q < pos + size; ++q) {
      bucket.pairs.emplace_back(system_scores[pairs[q].a].first, system_scores[pairs[q].b].first);
    }
    pos += size;
    buckets.push_back(std::move(bucket));
  }
  return buckets;
}

double pairwise_bucket_corr(const ScoreMatrix& metric, const ScoreMatrix& human,
                            const SystemPairBucket& bucket) {
  if (bucket.pairs.empty()) throw Error(Errc::kEmptyBucket, "bucket has no pairs");
  const Eigen::VectorXd metric_means = metric.column_means();
  const Eigen::VectorXd human_means = human.column_means();
  auto mean_of = [](const ScoreMatrix& m, const Eigen::VectorXd& means, const std::string& s) {
    auto col = m.column_of(s);
    if (!col) throw Error(Errc::kShapeMismatch, "system " + s + " not in score matrix");
    return means(*col);
  };
  auto sign = [](double d) { return (d > 0) - (d < 0); };

  long agree = 0;
  for (const auto& [a, b] : bucket.pairs) {
    const int sm = sign(mean_of(metric, metric_means, a) - mean_of(metric, metric_means, b));
    const int sh = sign(mean_of(human, human_means, a) - mean_of(human, human_means, b));
    agree += sm == sh ? 1 : -1;
  }
  return static_cast<double>(agree) / static_cast<double>(bucket.pairs.size());
}

}  // namespace acueval
