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

#include "acueval/resample.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "acueval/error.hpp"
#include "acueval/random.hpp"

namespace acueval {

void ResampleConfig::validate() const {
  if (!(alpha_level > 0.0 && alpha_level < 1.0)) {
    throw Error(Errc::kInvalidArgument, fmt::format("alpha_level {} not in (0,1)", alpha_level));
  }
  if (trials == 0 || resamples == 0 || sample_size == 0) {
    throw Error(Errc::kInvalidArgument, "trials, resamples and sample size must be positive");
  }
}

namespace {

void require_aligned(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::kLengthMismatch,
                fmt::format("paired vectors differ in length ({} vs {})", a.size(), b.size()));
  }
  if (a.size() < 2) throw Error(Errc::kLengthMismatch, "paired test needs at least two examples");
}

// p for one fixed direction, resamples split over threads by index.
double directed_pvalue_impl(std::span<const double> diffs, std::uint64_t seed,
                            std::size_t resamples, unsigned threads) {
  const std::size_t n = diffs.size();
  std::vector<unsigned char> failed(resamples, 0);
  parallel_for(
      resamples,
      [&](std::size_t r) {
        Rng rng(substream_seed(seed, r));
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += diffs[rng.below(n)];
        failed[r] = sum <= 0.0 ? 1 : 0;
      },
      threads);
  const auto count = std::accumulate(failed.begin(), failed.end(), std::size_t{0});
  return static_cast<double>(count) / static_cast<double>(resamples);
}

double quantile(std::vector<double> sorted, double q) {
  // Type 7 (linear interpolation between order statistics).
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double directed_bootstrap_pvalue(std::span<const double> diffs, const ResampleConfig& cfg) {
  cfg.validate();
  if (diffs.size() < 2) throw Error(Errc::kLengthMismatch, "paired test needs at least two examples");
  return directed_pvalue_impl(diffs, cfg.seed, cfg.resamples, cfg.threads);
}

double paired_bootstrap_test(std::span<const double> a, std::span<const double> b,
                             const ResampleConfig& cfg) {
  require_aligned(a, b);
  std::vector<double> diffs(a.size());
  double observed = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diffs[i] = a[i] - b[i];
    observed += diffs[i];
  }
  if (observed < 0) {
    for (auto& d : diffs) d = -d;
  }
  return directed_bootstrap_pvalue(diffs, cfg);
}

PowerResult power_analysis(std::span<const double> scores_a, std::span<const double> scores_b,
                           const ResampleConfig& cfg) {
  cfg.validate();
  require_aligned(scores_a, scores_b);
  if (cfg.sample_size < 2) throw Error(Errc::kInvalidArgument, "sample size must be at least 2");

  const std::size_t total = scores_a.size();
  std::vector<double> diffs(total);
  double observed = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    diffs[i] = scores_a[i] - scores_b[i];
    observed += diffs[i];
  }
  if (observed < 0) {
    for (auto& d : diffs) d = -d;
  }

  PowerResult result;
  result.config = cfg;
  result.trial_p_values.assign(cfg.trials, 1.0);
  parallel_for(
      cfg.trials,
      [&](std::size_t t) {
        const std::uint64_t trial_seed = substream_seed(cfg.seed, t);
        Rng rng(trial_seed);
        std::vector<double> sample(cfg.sample_size);
        for (auto& d : sample) d = diffs[rng.below(total)];
        result.trial_p_values[t] =
            directed_pvalue_impl(sample, mix64(trial_seed), cfg.resamples, /*threads=*/1);
      },
      cfg.threads);

  const auto rejected = std::count_if(result.trial_p_values.begin(), result.trial_p_values.end(),
                                      [&](double p) { return p < cfg.alpha_level; });
  result.power = static_cast<double>(rejected) / static_cast<double>(cfg.trials);
  return result;
}

double permutation_metric_test(const ScoreMatrix& metric_x, const ScoreMatrix& metric_y,
                               const ScoreMatrix& human, CorrKind kind, CorrLevel level,
                               const ResampleConfig& cfg) {
  cfg.validate();
  require_same_keys(metric_x, human);
  require_same_keys(metric_y, human);
  const auto rx = correlation_at(metric_x, human, kind, level);
  const auto ry = correlation_at(metric_y, human, kind, level);
  if (!rx || !ry) throw Error(Errc::kDegenerate, "observed correlation undefined");
  const double observed = std::abs(*rx - *ry);
  // Guards against spurious misses when |d*| equals |d| up to rounding.
  constexpr double kTieTolerance = 1e-12;

  // 0 = undefined, 1 = less extreme, 2 = at least as extreme.
  std::vector<unsigned char> outcome(cfg.resamples, 0);
  parallel_for(
      cfg.resamples,
      [&](std::size_t r) {
        Rng rng(substream_seed(cfg.seed, r));
        Eigen::MatrixXd x = metric_x.values;
        Eigen::MatrixXd y = metric_y.values;
        std::uint64_t bits = 0;
        int left = 0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (left == 0) {
              bits = rng();
              left = 64;
            }
            if (bits & 1) std::swap(x(i, j), y(i, j));
            bits >>= 1;
            --left;
          }
        }
        const auto px = correlation_at(x, human.values, kind, level);
        const auto py = correlation_at(y, human.values, kind, level);
        if (!px || !py) return;
        outcome[r] = std::abs(*px - *py) >= observed - kTieTolerance ? 2 : 1;
      },
      cfg.threads);

  std::size_t valid = 0, extreme = 0;
  for (auto o : outcome) {
    valid += o != 0;
    extreme += o == 2;
  }
  if (valid == 0) throw Error(Errc::kDegenerate, "every permutation yields an undefined statistic");
  return static_cast<double>(extreme) / static_cast<double>(valid);
}

IntervalResult bootstrap_ci(const ScoreMatrix& metric, const ScoreMatrix& human, CorrKind kind,
                            CorrLevel level, const ResampleConfig& cfg) {
  cfg.validate();
  require_same_keys(metric, human);
  const auto point = correlation_at(metric, human, kind, level);
  if (!point) throw Error(Errc::kDegenerate, "full-sample correlation undefined");

  const Eigen::Index n = metric.rows();
  // Summary level only averages row coefficients, so compute them once.
  std::vector<std::optional<double>> row_corr;
  if (level == CorrLevel::kSummary) {
    row_corr.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      row_corr.push_back(corr_coeff(metric.values.row(i), human.values.row(i), kind));
    }
  }

  std::vector<std::optional<double>> stats(cfg.resamples);
  parallel_for(
      cfg.resamples,
      [&](std::size_t r) {
        Rng rng(substream_seed(cfg.seed, r));
        if (level == CorrLevel::kSummary) {
          double total = 0.0;
          std::size_t used = 0;
          for (Eigen::Index k = 0; k < n; ++k) {
            const auto& c = row_corr[rng.below(static_cast<std::uint64_t>(n))];
            if (c) {
              total += *c;
              ++used;
            }
          }
          if (used > 0) stats[r] = total / static_cast<double>(used);
          return;
        }
        Eigen::VectorXd mx = Eigen::VectorXd::Zero(metric.cols());
        Eigen::VectorXd mh = Eigen::VectorXd::Zero(human.cols());
        for (Eigen::Index k = 0; k < n; ++k) {
          const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
          mx += metric.values.row(i).transpose();
          mh += human.values.row(i).transpose();
        }
        stats[r] = corr_coeff(mx, mh, kind);
      },
      cfg.threads);

  std::vector<double> values;
  values.reserve(stats.size());
  for (const auto& s : stats)
    if (s) values.push_back(*s);
  if (values.empty()) throw Error(Errc::kDegenerate, "every resample yields an undefined correlation");
  std::sort(values.begin(), values.end());

  IntervalResult out;
  out.point = *point;
  out.level = 1.0 - cfg.alpha_level;
  out.low = std::min(quantile(values, cfg.alpha_level / 2), out.point);
  out.high = std::max(quantile(values, 1.0 - cfg.alpha_level / 2), out.point);
  return out;
}

double krippendorff_alpha(const std::vector<std::vector<double>>& units, AgreementScale scale) {
  std::vector<double> domain;
  std::size_t pairable = 0;
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    ++pairable;
    domain.insert(domain.end(), u.begin(), u.end());
  }
  if (pairable < 2) {
    throw Error(Errc::kInsufficientData, "need at least two units with two or more ratings");
  }
  std::sort(domain.begin(), domain.end());
  domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
  const std::size_t v = domain.size();
  auto index_of = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(domain.begin(), domain.end(), x) - domain.begin());
  };

  // Coincidence matrix.
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v));
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    std::map<std::size_t, double> counts;
    for (double x : u) counts[index_of(x)] += 1.0;
    const double weight = 1.0 / static_cast<double>(u.size() - 1);
    for (const auto& [c, nc] : counts) {
      for (const auto& [k, nk] : counts) {
        o(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) +=
            weight * nc * (c == k ? nk - 1.0 : nk);
      }
    }
  }
  const Eigen::VectorXd marginals = o.rowwise().sum();
  const double n = marginals.sum();

  Eigen::MatrixXd delta(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v));
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      const double d = domain[c] - domain[k];
      delta(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) =
          scale == AgreementScale::kNominal ? (c == k ? 0.0 : 1.0) : d * d;
    }
  }
  const double observed = (o.array() * delta.array()).sum() / n;
  const double expected =
      (marginals * marginals.transpose()).cwiseProduct(delta).sum() / (n * (n - 1.0));
  if (expected == 0.0) throw Error(Errc::kDegenerate, "all ratings share a single value");
  return 1.0 - observed / expected;
}

double krippendorff_alpha(std::span<const Rating> ratings, AgreementScale scale) {
  std::map<std::string, std::vector<double>> by_item;
  for (const auto& r : ratings) by_item[r.item].push_back(r.value);
  std::vector<std::vector<double>> units;
  units.reserve(by_item.size());
  for (auto& [_, values] : by_item) units.push_back(std::move(values));
  return krippendorff_alpha(units, scale);
}

}  // namespace acueval
