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

#include "acueval/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace acueval {

using nlohmann::json;

namespace {

std::string_view kProtocolNames[] = {"prior", "ref_free", "ref_based"};

// Strict and lenient ingestion share one code path: `reject` either throws or
// records the drop.
class Sink {
 public:
  explicit Sink(const LoadOptions& opts) : opts_(opts) {}

  // Returns normally only in lenient mode.
  void reject(Errc code, const std::string& where, const std::string& msg) const {
    if (!opts_.lenient) throw Error(code, where + ": " + msg);
    if (opts_.on_drop) {
      opts_.on_drop(std::string(errc_name(code)) + " " + where + ": " + msg);
    }
  }

 private:
  const LoadOptions& opts_;
};

struct Line {
  std::size_t number;
  json value;
};

// Parses one JSON object per non-blank line.
std::vector<Line> read_jsonl(const std::filesystem::path& path, const Sink& sink) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::vector<Line> out;
  std::string text;
  std::size_t n = 0;
  while (std::getline(in, text)) {
    ++n;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json v = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded() || !v.is_object()) {
      sink.reject(Errc::kMalformedRecord, fmt::format("{}:{}", path.string(), n),
                  "not a JSON object");
      continue;
    }
    out.push_back({n, std::move(v)});
  }
  return out;
}

std::string where(const std::filesystem::path& p, std::size_t line) {
  return fmt::format("{}:{}", p.string(), line);
}

// Throws std::invalid_argument with a field message; callers translate it to
// MalformedRecord.
std::string req_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw std::invalid_argument(fmt::format("field `{}` must be a string", key));
  }
  return it->get<std::string>();
}

Example parse_example(const json& j) {
  Example e;
  e.example_id = req_string(j, "example_id");
  e.reference = req_string(j, "reference");
  if (e.reference.empty()) throw std::invalid_argument("reference is empty");
  if (auto it = j.find("source"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw std::invalid_argument("field `source` must be a string");
    e.source = it->get<std::string>();
  }
  auto acus = j.find("acus");
  if (acus != j.end()) {
    if (!acus->is_array()) throw std::invalid_argument("field `acus` must be an array");
    std::unordered_set<std::string> seen;
    for (const auto& a : *acus) {
      if (!a.is_object()) throw std::invalid_argument("ACU entry must be an object");
      Acu acu{req_string(a, "acu_id"), req_string(a, "text")};
      if (acu.text.empty()) throw std::invalid_argument("ACU " + acu.acu_id + " has empty text");
      if (!seen.insert(acu.acu_id).second) {
        throw std::invalid_argument("duplicate acu_id " + acu.acu_id);
      }
      e.acus.push_back(std::move(acu));
    }
  }
  return e;
}

MatchAnnotation parse_match(const json& j) {
  MatchAnnotation a;
  a.example_id = req_string(j, "example_id");
  a.system = req_string(j, "system");
  a.worker_id = req_string(j, "worker_id");
  auto labels = j.find("labels");
  if (labels == j.end() || !labels->is_object()) {
    throw std::invalid_argument("field `labels` must be an object");
  }
  for (const auto& [id, v] : labels->items()) {
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
      throw std::invalid_argument("label for " + id + " must be 0 or 1");
    }
    a.labels.emplace(id, v.get<int>());
  }
  return a;
}

LikertAnnotation parse_likert(const json& j) {
  LikertAnnotation a;
  a.example_id = req_string(j, "example_id");
  a.system = req_string(j, "system");
  a.worker_id = req_string(j, "worker_id");
  auto p = parse_likert_protocol(req_string(j, "protocol"));
  if (!p) throw std::invalid_argument("unknown protocol");
  a.protocol = *p;
  auto s = j.find("score");
  if (s == j.end() || !s->is_number_integer() || s->get<int>() < 1 || s->get<int>() > 5) {
    throw std::invalid_argument("score must be an integer in [1,5]");
  }
  a.score = s->get<int>();
  return a;
}

json to_json(const Example& e) {
  json acus = json::array();
  for (const auto& a : e.acus) acus.push_back({{"acu_id", a.acu_id}, {"text", a.text}});
  json j = {{"example_id", e.example_id}, {"reference", e.reference}, {"acus", acus}};
  if (e.source) j["source"] = *e.source;
  return j;
}

void write_lines(const std::filesystem::path& p, const std::vector<json>& lines) {
  std::ofstream out(p);
  if (!out) throw Error(Errc::kIo, "cannot write " + p.string());
  for (const auto& j : lines) out << j.dump() << '\n';
}

}  // namespace

std::string_view to_string(LikertProtocol p) {
  return kProtocolNames[static_cast<int>(p)];
}

std::optional<LikertProtocol> parse_likert_protocol(std::string_view s) {
  for (int i = 0; i < 3; ++i) {
    if (s == kProtocolNames[i]) return static_cast<LikertProtocol>(i);
  }
  return std::nullopt;
}

CorpusCounts Corpus::counts() const {
  return {examples.size(),          systems().size(),
          outputs.size(),           match_annotations.size(),
          likert_annotations.size(), external_metric_scores.size()};
}

std::vector<std::string> Corpus::systems() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& o : outputs) {
    if (seen.insert(o.system).second) out.push_back(o.system);
  }
  return out;
}

std::vector<std::string> Corpus::example_ids() const {
  std::vector<std::string> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.example_id);
  return out;
}

const Example* Corpus::find_example(const std::string& example_id) const {
  auto it = std::find_if(examples.begin(), examples.end(),
                         [&](const Example& e) { return e.example_id == example_id; });
  return it == examples.end() ? nullptr : &*it;
}

const SystemOutput* Corpus::find_output(const std::string& example_id,
                                        const std::string& system) const {
  auto it = std::find_if(outputs.begin(), outputs.end(), [&](const SystemOutput& o) {
    return o.example_id == example_id && o.system == system;
  });
  return it == outputs.end() ? nullptr : &*it;
}

std::vector<MatchAnnotation> Corpus::annotations_for(const std::string& example_id,
                                                     const std::string& system) const {
  std::vector<MatchAnnotation> out;
  for (const auto& a : match_annotations) {
    if (a.example_id == example_id && a.system == system) out.push_back(a);
  }
  return out;
}

Corpus load_benchmark(const BenchmarkPaths& paths, const LoadOptions& opts) {
  Sink sink(opts);
  Corpus corpus;

  std::unordered_map<std::string, std::size_t> example_index;
  if (paths.examples) {
    for (auto& [n, j] : read_jsonl(*paths.examples, sink)) {
      Example e;
      try {
        e = parse_example(j);
      } catch (const std::exception& ex) {
        sink.reject(Errc::kMalformedRecord, where(*paths.examples, n), ex.what());
        continue;
      }
      if (example_index.count(e.example_id)) {
        sink.reject(Errc::kDuplicateKey, where(*paths.examples, n),
                    "duplicate example_id " + e.example_id);
        continue;
      }
      example_index.emplace(e.example_id, corpus.examples.size());
      corpus.examples.push_back(std::move(e));
    }
  }

  std::set<std::pair<std::string, std::string>> output_keys;
  std::unordered_set<std::string> known_systems;
  if (paths.outputs) {
    for (auto& [n, j] : read_jsonl(*paths.outputs, sink)) {
      SystemOutput o;
      try {
        o = {req_string(j, "system"), req_string(j, "example_id"), req_string(j, "summary")};
      } catch (const std::exception& ex) {
        sink.reject(Errc::kMalformedRecord, where(*paths.outputs, n), ex.what());
        continue;
      }
      if (paths.examples && !example_index.count(o.example_id)) {
        sink.reject(Errc::kDanglingReference, where(*paths.outputs, n),
                    "unknown example " + o.example_id);
        continue;
      }
      if (!output_keys.emplace(o.system, o.example_id).second) {
        sink.reject(Errc::kDuplicateKey, where(*paths.outputs, n),
                    fmt::format("duplicate output ({}, {})", o.system, o.example_id));
        continue;
      }
      known_systems.insert(o.system);
      corpus.outputs.push_back(std::move(o));
    }
  }

  auto check_cell = [&](const std::string& ex, const std::string& sys) -> std::optional<std::string> {
    if (paths.examples && !example_index.count(ex)) return "unknown example " + ex;
    if (paths.outputs && !output_keys.count({sys, ex})) {
      return fmt::format("no output for ({}, {})", sys, ex);
    }
    return std::nullopt;
  };

  if (paths.acu_annotations) {
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (auto& [n, j] : read_jsonl(*paths.acu_annotations, sink)) {
      const auto loc = where(*paths.acu_annotations, n);
      MatchAnnotation a;
      try {
        a = parse_match(j);
      } catch (const std::exception& ex) {
        sink.reject(Errc::kMalformedRecord, loc, ex.what());
        continue;
      }
      if (auto bad = check_cell(a.example_id, a.system)) {
        sink.reject(Errc::kDanglingReference, loc, *bad);
        continue;
      }
      if (paths.examples) {
        const auto& acus = corpus.examples[example_index.at(a.example_id)].acus;
        std::optional<std::string> problem;
        Errc code = Errc::kDanglingReference;
        for (const auto& [id, _] : a.labels) {
          bool known = std::any_of(acus.begin(), acus.end(),
                                   [&](const Acu& u) { return u.acu_id == id; });
          if (!known) {
            problem = "unknown acu_id " + id + " for example " + a.example_id;
            break;
          }
        }
        if (!problem) {
          for (const auto& u : acus) {
            if (!a.labels.count(u.acu_id)) {
              problem = "labels do not cover acu_id " + u.acu_id;
              code = Errc::kMalformedRecord;
              break;
            }
          }
        }
        if (problem) {
          sink.reject(code, loc, *problem);
          continue;
        }
      }
      if (!seen.emplace(a.example_id, a.system, a.worker_id).second) {
        sink.reject(Errc::kDuplicateKey, loc,
                    fmt::format("duplicate annotation ({}, {}, {})", a.example_id,
                                a.system, a.worker_id));
        continue;
      }
      corpus.match_annotations.push_back(std::move(a));
    }
  }

  if (paths.likert_annotations) {
    std::set<std::tuple<std::string, std::string, std::string, int>> seen;
    for (auto& [n, j] : read_jsonl(*paths.likert_annotations, sink)) {
      const auto loc = where(*paths.likert_annotations, n);
      LikertAnnotation a;
      try {
        a = parse_likert(j);
      } catch (const std::exception& ex) {
        sink.reject(Errc::kMalformedRecord, loc, ex.what());
        continue;
      }
      if (auto bad = check_cell(a.example_id, a.system)) {
        sink.reject(Errc::kDanglingReference, loc, *bad);
        continue;
      }
      if (!seen.emplace(a.example_id, a.system, a.worker_id,
                        static_cast<int>(a.protocol)).second) {
        sink.reject(Errc::kDuplicateKey, loc, "duplicate Likert annotation");
        continue;
      }
      corpus.likert_annotations.push_back(std::move(a));
    }
  }

  for (const auto& [name, path] : paths.metric_scores) {
    ScoreMatrix m = read_score_matrix_csv(path.string());
    std::optional<std::string> problem;
    std::unordered_set<std::string> rows;
    for (const auto& id : m.example_ids) {
      if (!rows.insert(id).second) {
        throw Error(Errc::kDuplicateKey, path.string() + ": duplicate example row " + id);
      }
      if (paths.examples && !example_index.count(id)) problem = "unknown example " + id;
    }
    for (const auto& s : m.systems) {
      if (paths.outputs && !known_systems.count(s)) problem = "unknown system " + s;
    }
    if (problem) {
      sink.reject(Errc::kDanglingReference, path.string(), *problem);
      continue;
    }
    corpus.external_metric_scores.emplace(name, std::move(m));
  }
  return corpus;
}

void write_benchmark(const Corpus& corpus, const BenchmarkPaths& paths) {
  if (paths.examples) {
    std::vector<json> lines;
    for (const auto& e : corpus.examples) lines.push_back(to_json(e));
    write_lines(*paths.examples, lines);
  }
  if (paths.outputs) {
    std::vector<json> lines;
    for (const auto& o : corpus.outputs) {
      lines.push_back({{"system", o.system}, {"example_id", o.example_id}, {"summary", o.summary}});
    }
    write_lines(*paths.outputs, lines);
  }
  if (paths.acu_annotations) {
    std::vector<json> lines;
    for (const auto& a : corpus.match_annotations) {
      lines.push_back({{"example_id", a.example_id}, {"system", a.system},
                       {"worker_id", a.worker_id}, {"labels", a.labels}});
    }
    write_lines(*paths.acu_annotations, lines);
  }
  if (paths.likert_annotations) {
    std::vector<json> lines;
    for (const auto& a : corpus.likert_annotations) {
      lines.push_back({{"example_id", a.example_id}, {"system", a.system},
                       {"worker_id", a.worker_id},
                       {"protocol", std::string(to_string(a.protocol))},
                       {"score", a.score}});
    }
    write_lines(*paths.likert_annotations, lines);
  }
  for (const auto& [name, path] : paths.metric_scores) {
    auto it = corpus.external_metric_scores.find(name);
    if (it == corpus.external_metric_scores.end()) continue;
    std::ofstream out(path);
    if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
    write_score_matrix_csv(out, it->second);
  }
}

std::vector<MatchAnnotation> read_match_annotations(const std::filesystem::path& path) {
  BenchmarkPaths p;
  p.acu_annotations = path;
  return load_benchmark(p).match_annotations;
}

std::vector<LikertAnnotation> read_likert_annotations(const std::filesystem::path& path) {
  BenchmarkPaths p;
  p.likert_annotations = path;
  return load_benchmark(p).likert_annotations;
}

ScoreMatrix build_score_matrix(const CellScorer& scorer,
                               const std::vector<std::string>& systems,
                               const std::vector<std::string>& example_ids) {
  ScoreMatrix m;
  m.example_ids = example_ids;
  m.systems = systems;
  m.values.resize(static_cast<Eigen::Index>(example_ids.size()),
                  static_cast<Eigen::Index>(systems.size()));
  for (std::size_t i = 0; i < example_ids.size(); ++i) {
    for (std::size_t j = 0; j < systems.size(); ++j) {
      auto v = scorer(example_ids[i], systems[j]);
      if (!v) {
        throw Error(Errc::kIncompleteGrid,
                    fmt::format("no score for ({}, {})", example_ids[i], systems[j]));
      }
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return m;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace acueval
