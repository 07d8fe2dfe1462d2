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

#include "acueval/lexmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

#include "acueval/error.hpp"

namespace acueval {

std::vector<std::string> tokenize(std::string_view text, const TokenizeOptions& opts) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (opts.stem && current.size() > 3) current = porter_stem(current);
    tokens.push_back(std::move(current));
    current.clear();
  };
  for (unsigned char c : text) {
    if (c < 0x80 && std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

namespace {

using Tokens = std::vector<std::string>;

struct VectorHash {
  template <typename T>
  std::size_t operator()(const std::vector<T>& v) const {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (const auto& x : v) h = (h ^ std::hash<T>{}(x)) * 0x100000001b3ULL;
    return h;
  }
};

template <typename T>
using NgramCounts = std::unordered_map<std::vector<T>, std::size_t, VectorHash>;

template <typename T>
NgramCounts<T> ngram_counts(const std::vector<T>& seq, std::size_t n) {
  NgramCounts<T> counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    ++counts[std::vector<T>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                            seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

template <typename T>
std::size_t clipped_overlap(const NgramCounts<T>& cand, const NgramCounts<T>& ref) {
  std::size_t total = 0;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) total += std::min(c, it->second);
  }
  return total;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

MetricScore prf(std::size_t overlap, std::size_t ref_total, std::size_t cand_total) {
  MetricScore s;
  const double r = ref_total ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
  const double p = cand_total ? static_cast<double>(overlap) / static_cast<double>(cand_total) : 0.0;
  s.recall = r;
  s.precision = p;
  s.f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  return s;
}

// Lenient UTF-8 decoding: a malformed byte stands for itself.
std::u32string decode_utf8_without_space(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    char32_t cp = c;
    if (len > 1 && i + len <= s.size()) {
      cp = c & (0xFF >> (len + 1));
      for (std::size_t k = 1; k < len; ++k) {
        const auto cc = static_cast<unsigned char>(s[i + k]);
        if ((cc >> 6) != 0x2) {
          len = 0;
          break;
        }
        cp = (cp << 6) | (cc & 0x3F);
      }
    }
    if (len <= 1) {
      cp = c;
      len = 1;
    }
    i += len;
    if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' || cp == U'\f') continue;
    out.push_back(cp);
  }
  return out;
}

}  // namespace

MetricScore rouge(std::string_view reference, std::string_view candidate, RougeVariant variant,
                  const TokenizeOptions& opts) {
  const Tokens ref = tokenize(reference, opts);
  const Tokens cand = tokenize(candidate, opts);
  if (variant == RougeVariant::kRougeL) {
    return prf(lcs_length(ref, cand), ref.size(), cand.size());
  }
  const std::size_t n = variant == RougeVariant::kRouge1 ? 1 : 2;
  const auto ref_counts = ngram_counts(ref, n);
  const auto cand_counts = ngram_counts(cand, n);
  const std::size_t ref_total = ref.size() >= n ? ref.size() - n + 1 : 0;
  const std::size_t cand_total = cand.size() >= n ? cand.size() - n + 1 : 0;
  return prf(clipped_overlap(cand_counts, ref_counts), ref_total, cand_total);
}

double chrf(std::string_view reference, std::string_view candidate) {
  constexpr std::size_t kMaxOrder = 6;
  constexpr double kBeta2 = 4.0;
  std::u32string ref_chars = decode_utf8_without_space(reference);
  std::u32string hyp_chars = decode_utf8_without_space(candidate);
  if (ref_chars.empty() || hyp_chars.empty()) {
    return ref_chars.empty() && hyp_chars.empty() ? 1.0 : 0.0;
  }
  const std::vector<char32_t> ref(ref_chars.begin(), ref_chars.end());
  const std::vector<char32_t> hyp(hyp_chars.begin(), hyp_chars.end());

  double precision = 0.0, recall = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    if (ref.size() < n || hyp.size() < n) continue;
    const auto rc = ngram_counts(ref, n);
    const auto hc = ngram_counts(hyp, n);
    const auto match = static_cast<double>(clipped_overlap(hc, rc));
    precision += match / static_cast<double>(hyp.size() - n + 1);
    recall += match / static_cast<double>(ref.size() - n + 1);
    ++orders;
  }
  precision /= static_cast<double>(orders);
  recall /= static_cast<double>(orders);
  if (precision + recall == 0.0) return 0.0;
  return (1 + kBeta2) * precision * recall / (kBeta2 * precision + recall);
}

double bleu(const std::vector<std::string>& references, std::string_view candidate) {
  if (references.empty()) throw Error(Errc::kInvalidArgument, "BLEU needs at least one reference");
  constexpr std::size_t kMaxOrder = 4;
  const Tokens cand = tokenize(candidate);
  std::vector<Tokens> refs;
  for (const auto& r : references) refs.push_back(tokenize(r));

  const std::size_t c = cand.size();
  std::size_t r = refs.front().size();
  for (const auto& ref : refs) {
    const auto d = [&](std::size_t len) { return len > c ? len - c : c - len; };
    if (d(ref.size()) < d(r) || (d(ref.size()) == d(r) && ref.size() < r)) r = ref.size();
  }
  if (c == 0) return r == 0 ? 1.0 : 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    const auto cand_counts = ngram_counts(cand, n);
    NgramCounts<std::string> max_ref;
    for (const auto& ref : refs) {
      for (const auto& [g, cnt] : ngram_counts(ref, n)) {
        auto& slot = max_ref[g];
        slot = std::max(slot, cnt);
      }
    }
    const auto matches = static_cast<double>(clipped_overlap(cand_counts, max_ref));
    const double total = c >= n ? static_cast<double>(c - n + 1) : 0.0;
    const double p = matches > 0 ? matches / total : 1.0 / (total + 1.0);
    log_sum += std::log(p);
  }
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return std::min(1.0, bp * std::exp(log_sum / static_cast<double>(kMaxOrder)));
}

std::vector<std::size_t> extractive_fragments(const Tokens& source, const Tokens& candidate) {
  std::vector<std::size_t> fragments;
  std::size_t i = 0;
  while (i < candidate.size()) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < source.size(); ++j) {
      std::size_t k = 0;
      while (i + k < candidate.size() && j + k < source.size() &&
             candidate[i + k] == source[j + k]) {
        ++k;
      }
      best = std::max(best, k);
    }
    i += std::max<std::size_t>(best, 1);
    if (best > 0) fragments.push_back(best);
  }
  return fragments;
}

ExtractiveStats extractive_stats(std::string_view source, std::string_view candidate) {
  const Tokens src = tokenize(source);
  const Tokens cand = tokenize(candidate);
  if (src.empty()) throw Error(Errc::kEmptySource, "source has no tokens");
  if (cand.empty()) throw Error(Errc::kEmptyCandidate, "candidate has no tokens");

  ExtractiveStats s;
  const auto frags = extractive_fragments(src, cand);
  const auto len = static_cast<double>(cand.size());
  double covered = 0.0, squared = 0.0;
  for (auto f : frags) {
    covered += static_cast<double>(f);
    squared += static_cast<double>(f) * static_cast<double>(f);
  }
  s.coverage = covered / len;
  s.density = squared / len;
  s.compression = static_cast<double>(src.size()) / len;

  for (int n = 1; n <= 3; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (cand.size() < un) {
      s.novel_ngram_fraction[n] = 0.0;
      s.repeated_ngram_fraction[n] = 0.0;
      continue;
    }
    const auto src_counts = ngram_counts(src, un);
    const auto cand_counts = ngram_counts(cand, un);
    const auto total = static_cast<double>(cand.size() - un + 1);
    double novel = 0.0, repeated = 0.0;
    for (const auto& [g, cnt] : cand_counts) {
      if (!src_counts.count(g)) novel += static_cast<double>(cnt);
      repeated += static_cast<double>(cnt - 1);
    }
    s.novel_ngram_fraction[n] = novel / total;
    s.repeated_ngram_fraction[n] = repeated / total;
  }
  return s;
}

}  // namespace acueval
