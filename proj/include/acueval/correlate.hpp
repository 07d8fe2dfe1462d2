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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "acueval/error.hpp"
#include "acueval/score_matrix.hpp"

namespace acueval {

enum class CorrKind { kPearson, kSpearman, kKendall };

std::string_view to_string(CorrKind kind);
std::optional<CorrKind> parse_corr_kind(std::string_view s);

namespace detail {

template <typename Derived>
Eigen::VectorXd to_column(const Eigen::DenseBase<Derived>& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = static_cast<double>(v.derived().coeff(i));
  return out;
}

inline bool is_constant(const Eigen::VectorXd& v) {
  return (v.array() == v(0)).all();
}

inline double pearson_unchecked(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double r = (dx * dy).sum() / std::sqrt((dx * dx).sum() * (dy * dy).sum());
  return std::clamp(r, -1.0, 1.0);
}

// Fractional ranks, ties share the mean of their positions (1-based).
inline Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  Eigen::VectorXd ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && v(order[static_cast<std::size_t>(j + 1)]) ==
                            v(order[static_cast<std::size_t>(i)])) {
      ++j;
    }
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[static_cast<std::size_t>(k)]) = r;
    i = j + 1;
  }
  return ranks;
}

// Tau-b: (C - D) / sqrt((P - Tx)(P - Ty)), P = n(n-1)/2.
inline double kendall_tau_b_unchecked(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.size();
  double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double sx = x(i) - x(j);
      const double sy = y(i) - y(j);
      if (sx == 0 && sy == 0) {
        ++ties_x;
        ++ties_y;
      } else if (sx == 0) {
        ++ties_x;
      } else if (sy == 0) {
        ++ties_y;
      } else if ((sx > 0) == (sy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double tau = (concordant - discordant) / std::sqrt((pairs - ties_x) * (pairs - ties_y));
  return std::clamp(tau, -1.0, 1.0);
}

}  // namespace detail

// Correlation of two equally long vectors (row or column expressions).
// Returns nullopt when either side has zero variance.
template <typename DerivedX, typename DerivedY>
std::optional<double> corr_coeff(const Eigen::DenseBase<DerivedX>& x,
                                 const Eigen::DenseBase<DerivedY>& y, CorrKind kind) {
  if (x.size() != y.size()) {
    throw Error(Errc::kLengthMismatch, "correlation inputs differ in length");
  }
  if (x.size() < 2) throw Error(Errc::kLengthMismatch, "correlation needs at least two points");
  const Eigen::VectorXd xv = detail::to_column(x);
  const Eigen::VectorXd yv = detail::to_column(y);
  if (detail::is_constant(xv) || detail::is_constant(yv)) return std::nullopt;
  switch (kind) {
    case CorrKind::kPearson:
      return detail::pearson_unchecked(xv, yv);
    case CorrKind::kSpearman:
      return detail::pearson_unchecked(detail::average_ranks(xv), detail::average_ranks(yv));
    case CorrKind::kKendall:
      return detail::kendall_tau_b_unchecked(xv, yv);
  }
  return std::nullopt;
}

inline std::optional<double> corr_coeff(const std::vector<double>& x,
                                        const std::vector<double>& y, CorrKind kind) {
  return corr_coeff(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                    Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())),
                    kind);
}

struct SummaryLevelResult {
  double value = 0.0;
  std::size_t used_rows = 0;
  std::size_t skipped_rows = 0;
};

// Mean of per-example correlations across systems; rows where the
// coefficient is undefined are skipped and counted.
SummaryLevelResult summary_level(const ScoreMatrix& x, const ScoreMatrix& y, CorrKind kind);

// Correlation of the per-system mean vectors.
double system_level(const ScoreMatrix& x, const ScoreMatrix& y, CorrKind kind);

enum class CorrLevel { kSystem, kSummary };

std::string_view to_string(CorrLevel level);
std::optional<CorrLevel> parse_corr_level(std::string_view s);

// Dispatches to system_level / summary_level; nullopt when undefined.
// The matrix overload skips key checks and works on raw value grids.
std::optional<double> correlation_at(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                     CorrKind kind, CorrLevel level);
std::optional<double> correlation_at(const ScoreMatrix& x, const ScoreMatrix& y,
                                     CorrKind kind, CorrLevel level);

struct SystemPairBucket {
  std::size_t bucket_index = 0;  // 1-based
  std::vector<std::pair<std::string, std::string>> pairs;
  std::pair<double, double> effect_range{0.0, 0.0};
};

// Splits all unordered system pairs, sorted by |score difference|, into k
// contiguous buckets; the last (P mod k) buckets take one extra pair.
std::vector<SystemPairBucket> make_buckets(
    const std::vector<std::pair<std::string, double>>& system_scores, std::size_t k);

// (concordant - discordant) / |pairs| over the bucket, using system means.
// A pair is concordant when the metric and human differences share a sign;
// a tie on one side only is discordant, ties on both sides are concordant.
double pairwise_bucket_corr(const ScoreMatrix& metric, const ScoreMatrix& human,
                            const SystemPairBucket& bucket);

// (system, mean) pairs in column order.
std::vector<std::pair<std::string, double>> system_means(const ScoreMatrix& m);

}  // namespace acueval
