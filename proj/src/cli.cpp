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

#include "acueval/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "acueval/acu.hpp"
#include "acueval/corpus.hpp"
#include "acueval/correlate.hpp"
#include "acueval/judge.hpp"
#include "acueval/lexmetrics.hpp"
#include "acueval/resample.hpp"
#include "csv.hpp"
#include "digest.hpp"

namespace acueval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Keys outside any [section] belong to the subcommand being run.
class SubcommandConfig : public CLI::ConfigINI {
 public:
  explicit SubcommandConfig(std::string sub) : sub_(std::move(sub)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    for (auto& item : items) {
      if (item.parents.empty() && item.name != "++" && item.name != "--") item.parents = {sub_};
    }
    return items;
  }

 private:
  std::string sub_;
};

// Output location does not change results, so it stays out of the hash.
std::string config_hash(const CLI::App& sub) {
  std::istringstream dump(sub.config_to_str(true, false));
  std::string kept, line;
  while (std::getline(dump, line)) {
    if (!line.starts_with("out=")) kept += line + '\n';
  }
  return detail::sha256_hex(kept).substr(0, 16);
}

// Every value a subcommand may read. Unused fields keep their defaults.
struct Options {
  std::string out = ".";
  std::uint64_t seed = 0;
  bool lenient = false;

  std::string examples, outputs, annotations, likert, scores, human;
  std::vector<std::string> metric_files;
  std::vector<std::string> named_metrics;  // NAME=PATH for ingest
  std::vector<std::string> metric_names;   // native metrics to compute
  std::vector<std::string> systems;
  std::vector<double> grid;
  std::vector<std::size_t> sample_sizes{100};
  std::optional<double> alpha;
  std::string kind = "kendall";
  std::string level = "both";
  std::string dataset = "data";
  std::size_t buckets = 6;
  std::size_t trials = 1000;
  std::size_t resamples = 1000;
  double alpha_level = 0.05;
  bool stem = false;

  std::string evaluator = "geval_greedy";
  std::string endpoint, model, api_key_env = "OPENAI_API_KEY", cache_dir;
  std::size_t max_in_flight = 4;
  int retries = 3;
  int backoff_ms = 500;

  std::string dir;
};

struct RunContext {
  const Options& opt;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> artifacts;  // file name -> bytes

  std::string csv_header() const {
    return fmt::format("# acueval {} seed={} config={}\n", kToolVersion, opt.seed, config_hash);
  }
  json meta() const {
    return {{"tool", fmt::format("acueval {}", kToolVersion)},
            {"seed", opt.seed},
            {"config_hash", config_hash}};
  }
  void add(std::string name, std::string bytes) {
    artifacts.emplace_back(std::move(name), std::move(bytes));
  }
  void add_csv(std::string name, const std::string& body) { add(std::move(name), csv_header() + body); }
  void add_json(std::string name, json body) {
    body["meta"] = meta();
    add(std::move(name), body.dump(2) + "\n");
  }
};

std::string num(double v) { return std::isfinite(v) ? fmt::format("{}", v) : "NA"; }
std::string num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

std::string metric_label(const std::string& path) { return fs::path(path).stem().string(); }

CorrKind kind_of(const Options& o) {
  auto k = parse_corr_kind(o.kind);
  if (!k) throw Error(Errc::kInvalidArgument, "unknown correlation kind " + o.kind);
  return *k;
}

std::vector<CorrLevel> levels_of(const Options& o) {
  if (o.level == "both") return {CorrLevel::kSystem, CorrLevel::kSummary};
  auto l = parse_corr_level(o.level);
  if (!l) throw Error(Errc::kInvalidArgument, "unknown level " + o.level);
  return {*l};
}

ResampleConfig resample_config(const Options& o) {
  ResampleConfig cfg;
  cfg.seed = o.seed;
  cfg.trials = o.trials;
  cfg.resamples = o.resamples;
  cfg.alpha_level = o.alpha_level;
  return cfg;
}

// Loaded metric matrices, each aligned to the human matrix's order.
std::vector<std::pair<std::string, ScoreMatrix>> load_metrics(const Options& o,
                                                              const ScoreMatrix& human) {
  std::vector<std::pair<std::string, ScoreMatrix>> out;
  for (const auto& path : o.metric_files) {
    out.emplace_back(metric_label(path), align_to(read_score_matrix_csv(path), human));
  }
  return out;
}

// Examples (first-seen order) that have a cell for every system.
std::vector<std::string> complete_rows(std::span<const ScoredSummary> cells,
                                       const std::vector<std::string>& systems) {
  std::vector<std::string> order;
  std::map<std::string, std::set<std::string>> present;
  for (const auto& c : cells) {
    if (!present.count(c.example_id)) order.push_back(c.example_id);
    present[c.example_id].insert(c.system);
  }
  std::vector<std::string> rows;
  for (const auto& ex : order) {
    const auto& have = present[ex];
    if (std::all_of(systems.begin(), systems.end(), [&](const auto& s) { return have.count(s); })) {
      rows.push_back(ex);
    }
  }
  return rows;
}

std::vector<std::string> first_seen_systems(std::span<const ScoredSummary> cells) {
  std::vector<std::string> out;
  for (const auto& c : cells) {
    if (std::find(out.begin(), out.end(), c.system) == out.end()) out.push_back(c.system);
  }
  return out;
}

// Human score matrix for power / compare-systems: from a CSV or from ACU
// annotations, restricted to the requested systems.
ScoreMatrix system_score_matrix(const Options& o) {
  ScoreMatrix m;
  if (!o.scores.empty()) {
    m = read_score_matrix_csv(o.scores);
  } else {
    const auto annotations = read_match_annotations(o.annotations);
    const auto cells = score_annotations(annotations);
    const auto systems = o.systems.empty() ? first_seen_systems(cells) : o.systems;
    m = acu_matrix(cells, systems, complete_rows(cells, systems));
  }
  if (!o.systems.empty()) {
    ScoreMatrix sub;
    sub.example_ids = m.example_ids;
    sub.systems = o.systems;
    sub.values.resize(m.rows(), static_cast<Eigen::Index>(o.systems.size()));
    for (std::size_t j = 0; j < o.systems.size(); ++j) {
      auto col = m.column_of(o.systems[j]);
      if (!col) throw Error(Errc::kInvalidArgument, "unknown system " + o.systems[j]);
      sub.values.col(static_cast<Eigen::Index>(j)) = m.values.col(*col);
    }
    m = std::move(sub);
  }
  if (m.cols() < 2) throw Error(Errc::kInvalidArgument, "need at least two systems");
  if (m.rows() < 2) throw Error(Errc::kInsufficientData, "need at least two complete examples");
  return m;
}

std::vector<double> column(const ScoreMatrix& m, Eigen::Index j) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m.values(i, j);
  return v;
}

Corpus load_corpus(const Options& o, bool with_annotations, bool with_likert = false) {
  BenchmarkPaths p;
  if (!o.examples.empty()) p.examples = o.examples;
  if (!o.outputs.empty()) p.outputs = o.outputs;
  if (with_annotations && !o.annotations.empty()) p.acu_annotations = o.annotations;
  if (with_likert && !o.likert.empty()) p.likert_annotations = o.likert;
  LoadOptions lo;
  lo.lenient = o.lenient;
  return load_benchmark(p, lo);
}

// ---- subcommands ----------------------------------------------------------

std::string run_ingest(RunContext& ctx) {
  const auto& o = ctx.opt;
  BenchmarkPaths p;
  if (!o.examples.empty()) p.examples = o.examples;
  if (!o.outputs.empty()) p.outputs = o.outputs;
  if (!o.annotations.empty()) p.acu_annotations = o.annotations;
  if (!o.likert.empty()) p.likert_annotations = o.likert;
  for (const auto& spec : o.named_metrics) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) p.metric_scores[metric_label(spec)] = spec;
    else p.metric_scores[spec.substr(0, eq)] = spec.substr(eq + 1);
  }
  json dropped = json::array();
  LoadOptions lo;
  lo.lenient = o.lenient;
  lo.on_drop = [&](const std::string& msg) { dropped.push_back(msg); };
  const Corpus corpus = load_benchmark(p, lo);
  const auto c = corpus.counts();
  ctx.add_json("ingest.json", {{"counts",
                                {{"examples", c.examples},
                                 {"systems", c.systems},
                                 {"outputs", c.outputs},
                                 {"match_annotations", c.match_annotations},
                                 {"likert_annotations", c.likert_annotations},
                                 {"metric_matrices", c.metric_matrices}}},
                               {"dropped", dropped}});
  return fmt::format("ingest: {} examples, {} systems, {} outputs, {} ACU annotations, "
                     "{} Likert annotations, {} dropped",
                     c.examples, c.systems, c.outputs, c.match_annotations, c.likert_annotations,
                     dropped.size());
}

std::string run_score_acu(RunContext& ctx) {
  const auto& o = ctx.opt;
  const Corpus corpus = load_corpus(o, true);
  const auto cells = score_corpus(corpus);
  const auto systems = corpus.systems();
  std::vector<std::string> rows;
  for (const auto& e : corpus.examples) {
    if (std::any_of(cells.begin(), cells.end(),
                    [&](const ScoredSummary& c) { return c.example_id == e.example_id; })) {
      rows.push_back(e.example_id);
    }
  }
  const ScoreMatrix acu = acu_matrix(cells, systems, rows);
  std::ostringstream acu_csv;
  write_score_matrix_csv(acu_csv, acu);
  ctx.add_csv("acu.csv", acu_csv.str());

  std::optional<ScoreMatrix> nacu;
  if (o.alpha) {
    nacu = normalized_acu_matrix(cells, *o.alpha, systems, rows);
    std::ostringstream s;
    write_score_matrix_csv(s, *nacu);
    ctx.add_csv("nacu.csv", s.str());
  }

  std::map<std::string, std::pair<double, std::size_t>> lengths;
  for (const auto& c : cells) {
    if (std::find(rows.begin(), rows.end(), c.example_id) == rows.end()) continue;
    auto& [total, count] = lengths[c.system];
    total += static_cast<double>(c.cand_len);
    ++count;
  }
  const Eigen::VectorXd acu_means = acu.column_means();
  std::string body = o.alpha ? "system,acu,nacu,len\n" : "system,acu,len\n";
  for (std::size_t j = 0; j < systems.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const auto& [total, count] = lengths[systems[j]];
    body += detail::quote_csv(systems[j]) + "," + num(acu_means(jj));
    if (nacu) body += "," + num(nacu->column_means()(jj));
    body += "," + num(total / static_cast<double>(count)) + "\n";
  }
  ctx.add_csv("system_scores.csv", body);
  return fmt::format("score-acu: {} examples x {} systems", rows.size(), systems.size());
}

std::string run_calibrate(RunContext& ctx) {
  const auto& o = ctx.opt;
  const Corpus corpus = load_corpus(o, true);
  const auto grid = o.grid.empty() ? default_alpha_grid() : o.grid;
  const CalibrationResult r = calibrate_alpha(corpus, grid);
  json g = json::array();
  for (const auto& [a, c] : r.grid) g.push_back({a, c});
  ctx.add_json("calibration.json",
               {{"alpha", r.alpha}, {"residual_correlation", r.residual_correlation}, {"grid", g}});
  return fmt::format("calibrate: alpha={} residual_correlation={}", r.alpha, r.residual_correlation);
}

using CellMetric = std::function<double(const Example&, const SystemOutput&)>;

CellMetric native_metric(const std::string& name, bool stem) {
  const TokenizeOptions tok{stem};
  auto rouge_part = [tok](RougeVariant v, char part) -> CellMetric {
    return [=](const Example& e, const SystemOutput& o) {
      const MetricScore s = rouge(e.reference, o.summary, v, tok);
      return part == 'r' ? *s.recall : part == 'p' ? *s.precision : s.f1;
    };
  };
  static const std::map<std::string, RougeVariant> variants = {
      {"rouge1", RougeVariant::kRouge1}, {"rouge2", RougeVariant::kRouge2},
      {"rougeL", RougeVariant::kRougeL}};
  for (const auto& [prefix, v] : variants) {
    if (name.rfind(prefix, 0) == 0 && name.size() == prefix.size() + 1 &&
        std::string("rpf").find(name.back()) != std::string::npos) {
      return rouge_part(v, name.back());
    }
  }
  if (name == "chrf") {
    return [](const Example& e, const SystemOutput& o) { return chrf(e.reference, o.summary); };
  }
  if (name == "bleu") {
    return [](const Example& e, const SystemOutput& o) { return bleu({e.reference}, o.summary); };
  }
  auto source_stat = [](std::function<double(const ExtractiveStats&)> pick) -> CellMetric {
    return [pick](const Example& e, const SystemOutput& o) {
      if (!e.source) throw Error(Errc::kEmptySource, "example " + e.example_id + " has no source");
      return pick(extractive_stats(*e.source, o.summary));
    };
  };
  if (name == "coverage") return source_stat([](const ExtractiveStats& s) { return s.coverage; });
  if (name == "density") return source_stat([](const ExtractiveStats& s) { return s.density; });
  if (name == "compression") return source_stat([](const ExtractiveStats& s) { return s.compression; });
  for (int n = 1; n <= 3; ++n) {
    if (name == fmt::format("novel{}", n)) {
      return source_stat([n](const ExtractiveStats& s) { return s.novel_ngram_fraction.at(n); });
    }
    if (name == fmt::format("repeated{}", n)) {
      return source_stat([n](const ExtractiveStats& s) { return s.repeated_ngram_fraction.at(n); });
    }
  }
  throw Error(Errc::kInvalidArgument, "unknown metric " + name);
}

std::string run_metrics(RunContext& ctx) {
  const auto& o = ctx.opt;
  const Corpus corpus = load_corpus(o, false);
  const auto systems = corpus.systems();
  const auto rows = corpus.example_ids();
  for (const auto& name : o.metric_names) {
    const CellMetric metric = native_metric(name, o.stem);
    const ScoreMatrix m = build_score_matrix(
        [&](const std::string& ex, const std::string& sys) -> std::optional<double> {
          const SystemOutput* out = corpus.find_output(ex, sys);
          if (!out) return std::nullopt;
          return metric(*corpus.find_example(ex), *out);
        },
        systems, rows);
    std::ostringstream s;
    write_score_matrix_csv(s, m);
    ctx.add_csv(name + ".csv", s.str());
  }
  return fmt::format("metrics: {} metric(s) over {} examples x {} systems", o.metric_names.size(),
                     rows.size(), systems.size());
}

std::string run_correlate(RunContext& ctx) {
  const auto& o = ctx.opt;
  const ScoreMatrix human = read_score_matrix_csv(o.human);
  const CorrKind kind = kind_of(o);
  const auto levels = levels_of(o);
  std::string body = "metric";
  for (auto l : levels) body += fmt::format(",{}/{}", o.dataset, to_string(l));
  body += "\n";
  for (const auto& [name, m] : load_metrics(o, human)) {
    body += detail::quote_csv(name);
    for (auto l : levels) body += "," + num(correlation_at(m, human, kind, l));
    body += "\n";
  }
  ctx.add_csv("correlation.csv", body);
  return fmt::format("correlate: {} metric(s), {} correlation", o.metric_files.size(), to_string(kind));
}

std::string run_buckets(RunContext& ctx) {
  const auto& o = ctx.opt;
  const ScoreMatrix human = read_score_matrix_csv(o.human);
  const auto buckets = make_buckets(system_means(human), o.buckets);
  const auto means = human.column_means();
  std::string pairs = "bucket,system_a,system_b,abs_diff\n";
  for (const auto& b : buckets) {
    for (const auto& [a, c] : b.pairs) {
      pairs += fmt::format("{},{},{},{}\n", b.bucket_index, detail::quote_csv(a), detail::quote_csv(c),
                           num(std::abs(means(*human.column_of(a)) - means(*human.column_of(c)))));
    }
  }
  ctx.add_csv("buckets.csv", pairs);
  if (!o.metric_files.empty()) {
    std::string body = "metric";
    for (const auto& b : buckets) body += fmt::format(",bucket_{}", b.bucket_index);
    body += "\n";
    for (const auto& [name, m] : load_metrics(o, human)) {
      body += detail::quote_csv(name);
      for (const auto& b : buckets) body += "," + num(pairwise_bucket_corr(m, human, b));
      body += "\n";
    }
    ctx.add_csv("bucket_corr.csv", body);
  }
  return fmt::format("buckets: {} bucket(s) over {} systems", buckets.size(), human.systems.size());
}

std::string run_power(RunContext& ctx) {
  const auto& o = ctx.opt;
  const ScoreMatrix m = system_score_matrix(o);
  const std::size_t total_pairs =
      static_cast<std::size_t>(m.cols()) * static_cast<std::size_t>(m.cols() - 1) / 2;
  const auto buckets = make_buckets(system_means(m), std::min(o.buckets, total_pairs));
  std::map<std::pair<std::string, std::string>, std::size_t> bucket_of;
  for (const auto& b : buckets)
    for (const auto& p : b.pairs) bucket_of[p] = b.bucket_index;

  std::string body = "pair,effect_bucket,n,power\n";
  std::size_t lines = 0;
  for (Eigen::Index a = 0; a < m.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < m.cols(); ++b) {
      const auto& sa = m.systems[static_cast<std::size_t>(a)];
      const auto& sb = m.systems[static_cast<std::size_t>(b)];
      const auto xa = column(m, a), xb = column(m, b);
      for (std::size_t n : o.sample_sizes) {
        ResampleConfig cfg = resample_config(o);
        cfg.sample_size = n;
        const PowerResult r = power_analysis(xa, xb, cfg);
        body += fmt::format("{},{},{},{}\n", detail::quote_csv(sa + " vs " + sb),
                            bucket_of.at({sa, sb}), n, num(r.power));
        ++lines;
      }
    }
  }
  ctx.add_csv("power_curve.csv", body);
  return fmt::format("power: {} row(s) written to power_curve.csv", lines);
}

std::string run_compare_systems(RunContext& ctx) {
  const auto& o = ctx.opt;
  const ScoreMatrix m = system_score_matrix(o);
  const auto means = m.column_means();
  std::string body = "system_a,system_b,mean_a,mean_b,p_value\n";
  for (Eigen::Index a = 0; a < m.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < m.cols(); ++b) {
      const double p = paired_bootstrap_test(column(m, a), column(m, b), resample_config(o));
      body += fmt::format("{},{},{},{},{}\n", detail::quote_csv(m.systems[static_cast<std::size_t>(a)]),
                          detail::quote_csv(m.systems[static_cast<std::size_t>(b)]), num(means(a)),
                          num(means(b)), num(p));
    }
  }
  ctx.add_csv("system_comparison.csv", body);
  return fmt::format("compare-systems: {} systems", m.cols());
}

std::string run_compare_metrics(RunContext& ctx) {
  const auto& o = ctx.opt;
  const ScoreMatrix human = read_score_matrix_csv(o.human);
  const CorrKind kind = kind_of(o);
  const auto metrics = load_metrics(o, human);
  if (metrics.size() < 2) throw Error(Errc::kInvalidArgument, "compare-metrics needs two metrics");
  std::string body = "metric_x,metric_y,level,delta,p_value\n";
  for (auto level : levels_of(o)) {
    for (std::size_t x = 0; x < metrics.size(); ++x) {
      for (std::size_t y = x + 1; y < metrics.size(); ++y) {
        const auto cx = correlation_at(metrics[x].second, human, kind, level);
        const auto cy = correlation_at(metrics[y].second, human, kind, level);
        const double p = permutation_metric_test(metrics[x].second, metrics[y].second, human, kind,
                                                 level, resample_config(o));
        body += fmt::format("{},{},{},{},{}\n", detail::quote_csv(metrics[x].first),
                            detail::quote_csv(metrics[y].first), to_string(level),
                            num(*cx - *cy), num(p));
      }
    }
  }
  ctx.add_csv("metric_comparison.csv", body);
  return fmt::format("compare-metrics: {} metrics", metrics.size());
}

std::string run_ci(RunContext& ctx) {
  const auto& o = ctx.opt;
  const ScoreMatrix human = read_score_matrix_csv(o.human);
  const CorrKind kind = kind_of(o);
  std::string body = "metric,level,point,low,high\n";
  const auto metrics = load_metrics(o, human);
  for (auto level : levels_of(o)) {
    for (const auto& [name, m] : metrics) {
      const IntervalResult r = bootstrap_ci(m, human, kind, level, resample_config(o));
      body += fmt::format("{},{},{},{},{}\n", detail::quote_csv(name), to_string(level), num(r.point),
                          num(r.low), num(r.high));
    }
  }
  ctx.add_csv("ci.csv", body);
  return fmt::format("ci: {} metric(s) at level {}", metrics.size(), 1.0 - o.alpha_level);
}

std::string run_agreement(RunContext& ctx) {
  const auto& o = ctx.opt;
  json body;
  if (!o.annotations.empty()) {
    const auto annotations = read_match_annotations(o.annotations);
    std::vector<Rating> acu_level, summary_level;
    for (const auto& a : annotations) {
      const std::string cell = a.example_id + '\x1f' + a.system;
      double matched = 0;
      for (const auto& [id, label] : a.labels) {
        acu_level.push_back({cell + '\x1f' + id, a.worker_id, static_cast<double>(label)});
        matched += label;
      }
      if (!a.labels.empty()) {
        summary_level.push_back({cell, a.worker_id, matched / static_cast<double>(a.labels.size())});
      }
    }
    body["acu_level"] = krippendorff_alpha(acu_level, AgreementScale::kNominal);
    body["acu_summary_level"] = krippendorff_alpha(summary_level, AgreementScale::kInterval);
  }
  if (!o.likert.empty()) {
    const auto likert = read_likert_annotations(o.likert);
    json per_protocol = json::object();
    for (auto p : {LikertProtocol::kPrior, LikertProtocol::kRefFree, LikertProtocol::kRefBased}) {
      std::vector<Rating> ratings;
      for (const auto& a : likert) {
        if (a.protocol == p) {
          ratings.push_back({a.example_id + '\x1f' + a.system, a.worker_id,
                             static_cast<double>(a.score)});
        }
      }
      if (!ratings.empty()) {
        per_protocol[std::string(to_string(p))] =
            krippendorff_alpha(ratings, AgreementScale::kInterval);
      }
    }
    body["likert"] = per_protocol;
  }
  if (body.is_null()) throw Error(Errc::kInvalidArgument, "agreement needs --annotations or --likert");
  ctx.add_json("agreement.json", body);
  return "agreement: " + body.dump();
}

std::string run_judge(RunContext& ctx) {
  const auto& o = ctx.opt;
  const Corpus corpus = load_corpus(o, false);
  const auto evaluator = parse_evaluator(o.evaluator);
  if (!evaluator) throw Error(Errc::kInvalidArgument, "unknown evaluator " + o.evaluator);
  JudgeConfig cfg;
  cfg.endpoint = o.endpoint;
  cfg.model = o.model;
  cfg.api_key_env = o.api_key_env;
  cfg.max_in_flight = o.max_in_flight;
  cfg.cache_dir = o.cache_dir;
  cfg.max_retries = o.retries;
  cfg.initial_backoff = std::chrono::milliseconds(o.backoff_ms);
  JudgeStats stats;
  const std::string name = fmt::format("judge_{}", to_string(*evaluator));
  try {
    const ScoreMatrix m = run_judge_batch(corpus, *evaluator, cfg, &stats);
    std::ostringstream s;
    write_score_matrix_csv(s, m);
    ctx.add_csv(name + ".csv", s.str());
  } catch (const BatchError& e) {
    json manifest = json::array();
    for (const auto& f : e.failures()) {
      manifest.push_back({{"example_id", f.example_id}, {"system", f.system}, {"error", f.message}});
    }
    ctx.add_json(name + "_failures.json", {{"failures", manifest}});
    throw;
  }
  return fmt::format("judge: {} network call(s), {} cache hit(s)", stats.network_calls.load(),
                     stats.cache_hits.load());
}

// Known artifacts merged by `report`, in output order.
constexpr std::string_view kRequiredArtifact = "system_scores.csv";
constexpr std::string_view kReportArtifacts[] = {
    "system_scores.csv", "acu.csv",       "nacu.csv",        "ingest.json",
    "calibration.json",  "correlation.csv", "buckets.csv",   "bucket_corr.csv",
    "power_curve.csv",   "system_comparison.csv", "metric_comparison.csv",
    "ci.csv",            "agreement.json"};

std::string run_report(RunContext& ctx) {
  const auto& o = ctx.opt;
  const fs::path dir = o.dir;
  if (!fs::exists(dir / kRequiredArtifact)) {
    throw Error(Errc::kMissingArtifact,
                fmt::format("{} not found in {}", kRequiredArtifact, dir.string()));
  }
  json artifacts = json::object();
  std::string long_csv = "artifact,row,column,value\n";
  for (std::string_view name : kReportArtifacts) {
    const fs::path path = dir / name;
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    if (name.ends_with(".json")) {
      json j = json::parse(in, nullptr, false);
      if (j.is_discarded()) throw Error(Errc::kMalformedRecord, path.string() + " is not JSON");
      artifacts[std::string(name)] = j;
      continue;
    }
    json entry = {{"meta", json::array()}, {"header", json::array()}, {"rows", json::array()}};
    std::string line;
    std::vector<std::string> header;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.front() == '#') {
        entry["meta"].push_back(line.substr(1));
        continue;
      }
      auto fields = detail::split_csv_line(line);
      if (header.empty()) {
        header = fields;
        entry["header"] = fields;
        continue;
      }
      entry["rows"].push_back(fields);
      for (std::size_t k = 1; k < fields.size() && k < header.size(); ++k) {
        long_csv += fmt::format("{},{},{},{}\n", name, detail::quote_csv(fields[0]),
                                detail::quote_csv(header[k]), detail::quote_csv(fields[k]));
      }
      ++row;
    }
    artifacts[std::string(name)] = entry;
  }
  ctx.add_json("report.json", {{"artifacts", artifacts}});
  ctx.add_csv("report_long.csv", long_csv);
  return fmt::format("report: merged {} artifact(s)", artifacts.size());
}

void write_artifacts(const RunContext& ctx, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [name, bytes] : ctx.artifacts) {
    const fs::path tmp = dir / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw Error(Errc::kIo, "cannot write " + tmp.string());
      out << bytes;
    }
    fs::rename(tmp, dir / name);
  }
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Meta-evaluation of summarization metrics against ACU annotations", "acueval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  app.config_formatter(std::make_shared<SubcommandConfig>(args.empty() ? "" : args.front()));
  app.set_config("--config", "", "key=value configuration file");
  app.fallthrough();

  using Handler = std::string (*)(RunContext&);
  std::vector<std::pair<CLI::App*, Handler>> handlers;

  auto sub = [&](const char* name, const char* about, Handler h) {
    CLI::App* s = app.add_subcommand(name, about);
    s->add_option("--out", o.out, "Output directory")->capture_default_str();
    s->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    handlers.emplace_back(s, h);
    return s;
  };
  auto file = [](CLI::App* s, const char* flag, std::string& target, const char* about) {
    return s->add_option(flag, target, about)->check(CLI::ExistingFile);
  };
  auto metric_list = [&](CLI::App* s) {
    return s->add_option("--metrics", o.metric_files, "Metric score CSVs")
        ->delimiter(',')
        ->check(CLI::ExistingFile);
  };
  auto corr_flags = [&](CLI::App* s) {
    s->add_option("--kind", o.kind, "pearson|spearman|kendall")
        ->check(CLI::IsMember({"pearson", "spearman", "kendall"}))
        ->capture_default_str();
    s->add_option("--level", o.level, "sys|sum|both")
        ->check(CLI::IsMember({"sys", "sum", "both"}))
        ->capture_default_str();
  };
  auto resample_flags = [&](CLI::App* s) {
    s->add_option("--resamples", o.resamples, "Bootstrap/permutation draws")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--alpha-level", o.alpha_level, "Significance level")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  };
  auto system_source = [&](CLI::App* s) {
    auto* a = file(s, "--annotations", o.annotations, "ACU annotations JSONL");
    auto* c = file(s, "--scores", o.scores, "Score matrix CSV");
    a->excludes(c);
    s->add_option("--systems", o.systems, "Systems to compare")->delimiter(',');
  };

  {
    auto* s = sub("ingest", "Validate and count benchmark files", &run_ingest);
    file(s, "--examples", o.examples, "Examples JSONL");
    file(s, "--outputs", o.outputs, "System outputs JSONL");
    file(s, "--annotations", o.annotations, "ACU annotations JSONL");
    file(s, "--likert", o.likert, "Likert annotations JSONL");
    s->add_option("--metric", o.named_metrics, "NAME=PATH external metric CSV");
    s->add_flag("--lenient", o.lenient, "Drop invalid records instead of failing");
  }
  {
    auto* s = sub("score-acu", "ACU and normalized ACU score matrices", &run_score_acu);
    file(s, "--examples", o.examples, "Examples JSONL")->required();
    file(s, "--outputs", o.outputs, "System outputs JSONL")->required();
    file(s, "--annotations", o.annotations, "ACU annotations JSONL")->required();
    s->add_option("--alpha", o.alpha, "Normalization strength")->check(CLI::PositiveNumber);
    s->add_flag("--lenient", o.lenient, "Drop invalid records instead of failing");
  }
  {
    auto* s = sub("calibrate", "Grid-search the normalization strength", &run_calibrate);
    file(s, "--examples", o.examples, "Examples JSONL")->required();
    file(s, "--outputs", o.outputs, "System outputs JSONL")->required();
    file(s, "--annotations", o.annotations, "ACU annotations JSONL")->required();
    s->add_option("--grid", o.grid, "Alpha grid")->delimiter(',')->check(CLI::PositiveNumber);
    s->add_flag("--lenient", o.lenient, "Drop invalid records instead of failing");
  }
  {
    auto* s = sub("metrics", "Native lexical metrics as score CSVs", &run_metrics);
    file(s, "--examples", o.examples, "Examples JSONL")->required();
    file(s, "--outputs", o.outputs, "System outputs JSONL")->required();
    o.metric_names = {"rouge1r", "rouge2r", "rougeLr"};
    s->add_option("--metric", o.metric_names, "rouge{1,2,L}{r,p,f}, chrf, bleu, coverage, ...")
        ->delimiter(',')
        ->capture_default_str();
    s->add_flag("--stem", o.stem, "Porter-stem tokens");
  }
  {
    auto* s = sub("correlate", "Metric-human correlations", &run_correlate);
    file(s, "--human", o.human, "Human score CSV")->required();
    metric_list(s)->required();
    corr_flags(s);
    s->add_option("--dataset", o.dataset, "Dataset label for column names")->capture_default_str();
  }
  {
    auto* s = sub("buckets", "Bucketed pairwise system agreement", &run_buckets);
    file(s, "--human", o.human, "Human score CSV")->required();
    metric_list(s);
    s->add_option("--k", o.buckets, "Bucket count")->check(CLI::PositiveNumber)->capture_default_str();
  }
  {
    auto* s = sub("power", "Bootstrap power curves for system pairs", &run_power);
    system_source(s);
    s->add_option("--n", o.sample_sizes, "Sample sizes")->delimiter(',')->capture_default_str();
    s->add_option("--trials", o.trials, "Trials per power estimate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--buckets", o.buckets, "Effect buckets")->check(CLI::PositiveNumber)->capture_default_str();
    resample_flags(s);
  }
  {
    auto* s = sub("compare-systems", "Paired bootstrap tests between systems", &run_compare_systems);
    system_source(s);
    resample_flags(s);
  }
  {
    auto* s = sub("compare-metrics", "Permutation tests between metrics", &run_compare_metrics);
    file(s, "--human", o.human, "Human score CSV")->required();
    metric_list(s)->required();
    corr_flags(s);
    resample_flags(s);
  }
  {
    auto* s = sub("ci", "Bootstrap confidence intervals of correlations", &run_ci);
    file(s, "--human", o.human, "Human score CSV")->required();
    metric_list(s)->required();
    corr_flags(s);
    resample_flags(s);
  }
  {
    auto* s = sub("agreement", "Krippendorff's alpha of annotations", &run_agreement);
    file(s, "--annotations", o.annotations, "ACU annotations JSONL");
    file(s, "--likert", o.likert, "Likert annotations JSONL");
  }
  {
    auto* s = sub("judge", "LLM-judge recall scores", &run_judge);
    file(s, "--examples", o.examples, "Examples JSONL")->required();
    file(s, "--outputs", o.outputs, "System outputs JSONL")->required();
    s->add_option("--evaluator", o.evaluator, "gptscore|geval_greedy|geval_sampled")
        ->check(CLI::IsMember({"gptscore", "geval_greedy", "geval_sampled"}))
        ->capture_default_str();
    s->add_option("--endpoint", o.endpoint, "API base URL")->required();
    s->add_option("--model", o.model, "Model name")->required();
    s->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key")
        ->capture_default_str();
    s->add_option("--cache-dir", o.cache_dir, "Response cache directory");
    s->add_option("--max-in-flight", o.max_in_flight, "Concurrent requests")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--retries", o.retries, "Retries on transient failures")->capture_default_str();
    s->add_option("--backoff-ms", o.backoff_ms, "Initial retry backoff")->capture_default_str();
  }
  {
    auto* s = sub("report", "Merge artifacts into report.json", &run_report);
    s->add_option("--dir", o.dir, "Results directory")->required()->check(CLI::ExistingDirectory);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "acueval: " << e.what() << '\n';
    return 2;
  }

  for (auto& [s, handler] : handlers) {
    if (!s->parsed()) continue;
    if (s->get_name() == "report" && s->count("--out") == 0) o.out = o.dir;
    RunContext ctx{o, config_hash(*s), {}};
    try {
      const std::string summary = handler(ctx);
      write_artifacts(ctx, o.out);
      out << summary << '\n';
      return 0;
    } catch (const BatchError& e) {
      write_artifacts(ctx, o.out);
      err << "acueval " << s->get_name() << ": " << e.what() << '\n';
      return 1;
    } catch (const Error& e) {
      err << "acueval " << s->get_name() << ": " << e.what() << '\n';
      return e.code() == Errc::kIo ? 2 : 1;
    } catch (const std::exception& e) {
      err << "acueval " << s->get_name() << ": " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

}  // namespace acueval
