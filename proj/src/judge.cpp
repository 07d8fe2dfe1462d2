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

#include "acueval/judge.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "acueval/random.hpp"
#include "digest.hpp"

namespace acueval {

using nlohmann::json;

void JudgeConfig::validate() const {
  if (endpoint.empty()) throw Error(Errc::kInvalidArgument, "judge endpoint is empty");
  if (model.empty()) throw Error(Errc::kInvalidArgument, "judge model is empty");
  if (temperature < 0) throw Error(Errc::kInvalidArgument, "temperature must be non-negative");
  if (samples == 0) throw Error(Errc::kInvalidArgument, "samples must be positive");
  if (temperature == 0 && samples != 1) {
    throw Error(Errc::kInvalidArgument, "greedy decoding (temperature 0) takes exactly one sample");
  }
  if (max_in_flight == 0) throw Error(Errc::kInvalidArgument, "max_in_flight must be positive");
  if (max_retries < 0) throw Error(Errc::kInvalidArgument, "max_retries must be non-negative");
}

std::string render_gptscore_prompt(std::string_view reference, std::string_view candidate) {
  return fmt::format(
      "Answer the question based on the following reference summary and candidate summary.\n"
      "\n"
      "Question: Can all of the information in the reference summary be found in the "
      "candidate summary? (a). Yes. (b). No.\n"
      "\n"
      "Reference Summary: {}\n"
      "\n"
      "Candidate Summary: {}\n"
      "\n"
      "Answer: Yes",
      reference, candidate);
}

std::string render_geval_prompt(std::string_view reference, std::string_view candidate) {
  return fmt::format(
      "You will receive a reference summary and a candidate summary. Your task is to compare "
      "these two summaries and assess the extent to which the candidate summary covers the "
      "information presented in the reference summary.\n"
      "\n"
      "Please indicate your agreement with the following statement:\n"
      "\"All of the information in the reference summary can be found in the candidate "
      "summary.\"\n"
      "\n"
      "Use the following 5-point scale when determining your response:\n"
      "\n"
      "1. Strongly Disagree\n"
      "\n"
      "2. Disagree\n"
      "\n"
      "3. Neither Agree nor Disagree\n"
      "\n"
      "4. Agree\n"
      "\n"
      "5. Strongly Agree\n"
      "\n"
      "Input:\n"
      "\n"
      "Reference Summary:\n"
      "\n"
      "{}\n"
      "\n"
      "Candidate Summary:\n"
      "\n"
      "{}\n"
      "\n"
      "Evaluation Form (scores ONLY):\n"
      "\n"
      "- Agreement (1-5):",
      reference, candidate);
}

std::optional<int> parse_geval_score(std::string_view reply) {
  auto blocks = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_';
  };
  std::size_t i = 0;
  while (i < reply.size()) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    const bool left_ok = i == 0 || !blocks(reply[i - 1]);
    // A trailing period ends a sentence ("4.") unless a digit follows it.
    bool right_ok = j == reply.size() || !blocks(reply[j]);
    if (!right_ok && reply[j] == '.' &&
        (j + 1 == reply.size() || !std::isdigit(static_cast<unsigned char>(reply[j + 1])))) {
      right_ok = true;
    }
    if (left_ok && right_ok && j - i == 1 && reply[i] >= '1' && reply[i] <= '5') {
      return reply[i] - '0';
    }
    i = j;
  }
  return std::nullopt;
}

std::string judge_cache_key(std::string_view model, std::string_view prompt, double temperature,
                            std::size_t sample_index) {
  const std::string temp = fmt::format("{}", temperature);
  const std::string index = fmt::format("{}", sample_index);
  std::string material;
  for (std::string_view field : {model, prompt, std::string_view(temp), std::string_view(index)}) {
    material += fmt::format("{}:", field.size());
    material += field;
  }
  return detail::sha256_hex(material);
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::kInvalidArgument, "endpoint must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

double parse_completion_logprob(const std::string& body) {
  json reply = json::parse(body, nullptr, false);
  if (reply.is_discarded()) throw Error(Errc::kNoLogprobs, "reply is not JSON");
  try {
    const auto& logprobs = reply.at("choices").at(0).at("logprobs");
    const auto& values = logprobs.at("token_logprobs");
    if (!values.is_array() || values.empty() || !values.back().is_number()) {
      throw Error(Errc::kNoLogprobs, "reply carries no token log-probabilities");
    }
    if (auto tokens = logprobs.find("tokens"); tokens != logprobs.end() && tokens->is_array() &&
                                               !tokens->empty()) {
      std::string last = tokens->back().get<std::string>();
      const auto b = last.find_first_not_of(" \t\n");
      const auto e = last.find_last_not_of(" \t\n");
      last = b == std::string::npos ? "" : last.substr(b, e - b + 1);
      if (last != "Yes") throw Error(Errc::kNoLogprobs, "final echoed token is `" + last + "`");
    }
    return std::exp(values.back().get<double>());
  } catch (const json::exception& e) {
    throw Error(Errc::kNoLogprobs, e.what());
  }
}

double parse_chat_score(const std::string& body) {
  json reply = json::parse(body, nullptr, false);
  if (reply.is_discarded()) throw Error(Errc::kUnparseableScore, "reply is not JSON");
  std::string content;
  try {
    content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::kUnparseableScore, e.what());
  }
  auto score = parse_geval_score(content);
  if (!score) throw Error(Errc::kUnparseableScore, "no rating 1-5 in `" + content + "`");
  return *score;
}

}  // namespace

JudgeClient::JudgeClient(JudgeConfig cfg, JudgeStats* stats) : cfg_(std::move(cfg)), stats_(stats) {
  cfg_.validate();
}

std::optional<JudgeRecord> JudgeClient::load_cached(const std::string& key) const {
  if (cfg_.cache_dir.empty()) return std::nullopt;
  std::ifstream in(cfg_.cache_dir / (key + ".json"));
  if (!in) return std::nullopt;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("parsed_score")) return std::nullopt;
  JudgeRecord r;
  r.cache_key = j.value("cache_key", key);
  r.rendered_prompt = j.value("rendered_prompt", "");
  r.raw_response = j.value("raw_response", "");
  r.parsed_score = j.at("parsed_score").get<double>();
  r.timestamp = j.value("timestamp", "");
  return r;
}

void JudgeClient::store(const JudgeRecord& record) const {
  if (cfg_.cache_dir.empty()) return;
  std::filesystem::create_directories(cfg_.cache_dir);
  const json j = {{"cache_key", record.cache_key},
                  {"rendered_prompt", record.rendered_prompt},
                  {"raw_response", record.raw_response},
                  {"parsed_score", record.parsed_score},
                  {"timestamp", record.timestamp}};
  // Unique temp name then rename: readers never observe a partial file.
  thread_local std::mt19937_64 salt{std::random_device{}()};
  const auto final_path = cfg_.cache_dir / (record.cache_key + ".json");
  const auto tmp_path = cfg_.cache_dir / fmt::format("{}.{:016x}.tmp", record.cache_key, salt());
  {
    std::ofstream out(tmp_path);
    if (!out) throw Error(Errc::kIo, "cannot write " + tmp_path.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp_path, final_path);
}

std::string JudgeClient::post_with_retries(Route route, const std::string& body) {
  const SplitUrl url = split_url(cfg_.endpoint);
  const std::string path =
      url.path + (route == Route::kCompletions ? "/completions" : "/chat/completions");
  httplib::Headers headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_problem;
  bool rate_limited = false;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg_.initial_backoff * (1 << (attempt - 1)));
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    client.set_write_timeout(cfg_.timeout);
    if (stats_) ++stats_->network_calls;
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_problem = "transport failure: " + httplib::to_string(res.error());
      rate_limited = false;
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status == 429 || res->status >= 500) {
      last_problem = fmt::format("HTTP {}", res->status);
      rate_limited = res->status == 429;
      continue;
    }
    throw Error(Errc::kTransportError, fmt::format("HTTP {}: {}", res->status, res->body));
  }
  throw Error(rate_limited ? Errc::kRateLimited : Errc::kTransportError,
              fmt::format("{} after {} retries", last_problem, cfg_.max_retries));
}

JudgeRecord JudgeClient::fetch(Route route, const std::string& prompt, std::size_t sample_index,
                               double (*parse)(const std::string& body)) {
  const std::string key = judge_cache_key(cfg_.model, prompt, cfg_.temperature, sample_index);
  if (auto cached = load_cached(key)) {
    if (stats_) ++stats_->cache_hits;
    return *cached;
  }
  json request = {{"model", cfg_.model}, {"temperature", cfg_.temperature}};
  if (route == Route::kCompletions) {
    request["prompt"] = prompt;
    request["echo"] = true;
    request["logprobs"] = 1;
    request["max_tokens"] = 0;
  } else {
    request["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  }
  JudgeRecord record;
  record.cache_key = key;
  record.rendered_prompt = prompt;
  record.raw_response = post_with_retries(route, request.dump());
  record.parsed_score = parse(record.raw_response);
  record.timestamp = utc_timestamp();
  store(record);
  return record;
}

double JudgeClient::gptscore_recall(std::string_view reference, std::string_view candidate) {
  return fetch(Route::kCompletions, render_gptscore_prompt(reference, candidate), 0,
               &parse_completion_logprob)
      .parsed_score;
}

double JudgeClient::geval_recall(std::string_view reference, std::string_view candidate) {
  const std::string prompt = render_geval_prompt(reference, candidate);
  double total = 0.0;
  for (std::size_t s = 0; s < cfg_.samples; ++s) {
    total += fetch(Route::kChat, prompt, s, &parse_chat_score).parsed_score;
  }
  return total / static_cast<double>(cfg_.samples);
}

double gptscore_recall(std::string_view reference, std::string_view candidate,
                       const JudgeConfig& cfg) {
  return JudgeClient(cfg).gptscore_recall(reference, candidate);
}

double geval_recall(std::string_view reference, std::string_view candidate,
                    const JudgeConfig& cfg) {
  return JudgeClient(cfg).geval_recall(reference, candidate);
}

std::string_view to_string(Evaluator e) {
  switch (e) {
    case Evaluator::kGptScore: return "gptscore";
    case Evaluator::kGevalGreedy: return "geval_greedy";
    case Evaluator::kGevalSampled: return "geval_sampled";
  }
  return "?";
}

std::optional<Evaluator> parse_evaluator(std::string_view s) {
  for (auto e : {Evaluator::kGptScore, Evaluator::kGevalGreedy, Evaluator::kGevalSampled}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

JudgeConfig config_for(Evaluator e, JudgeConfig cfg) {
  if (e == Evaluator::kGevalSampled) {
    cfg.temperature = 1.0;
    cfg.samples = 5;
  } else {
    cfg.temperature = 0.0;
    cfg.samples = 1;
  }
  return cfg;
}

BatchError::BatchError(std::vector<CellFailure> failures)
    : Error(Errc::kBatchFailed, fmt::format("{} cell(s) failed; first: ({}, {}) {}",
                                            failures.size(), failures.front().example_id,
                                            failures.front().system, failures.front().message)),
      failures_(std::move(failures)) {}

ScoreMatrix run_judge_batch(const Corpus& corpus, Evaluator evaluator, const JudgeConfig& cfg,
                            JudgeStats* stats) {
  JudgeClient client(config_for(evaluator, cfg), stats);
  const auto systems = corpus.systems();
  const auto example_ids = corpus.example_ids();
  const std::size_t m = systems.size();
  const std::size_t cells = example_ids.size() * m;

  std::vector<std::optional<double>> scores(cells);
  std::vector<std::optional<std::string>> errors(cells);
  parallel_for(
      cells,
      [&](std::size_t c) {
        const auto& ex = example_ids[c / m];
        const auto& sys = systems[c % m];
        try {
          const Example* e = corpus.find_example(ex);
          const SystemOutput* o = corpus.find_output(ex, sys);
          if (!o) throw Error(Errc::kIncompleteGrid, "no output");
          scores[c] = evaluator == Evaluator::kGptScore
                          ? client.gptscore_recall(e->reference, o->summary)
                          : client.geval_recall(e->reference, o->summary);
        } catch (const std::exception& ex_) {
          errors[c] = ex_.what();
        }
      },
      static_cast<unsigned>(cfg.max_in_flight));

  std::vector<CellFailure> failures;
  for (std::size_t c = 0; c < cells; ++c) {
    if (errors[c]) failures.push_back({example_ids[c / m], systems[c % m], *errors[c]});
  }
  if (!failures.empty()) throw BatchError(std::move(failures));

  ScoreMatrix out;
  out.example_ids = example_ids;
  out.systems = systems;
  out.values.resize(static_cast<Eigen::Index>(example_ids.size()), static_cast<Eigen::Index>(m));
  for (std::size_t c = 0; c < cells; ++c) {
    out.values(static_cast<Eigen::Index>(c / m), static_cast<Eigen::Index>(c % m)) = *scores[c];
  }
  return out;
}

}  // namespace acueval
