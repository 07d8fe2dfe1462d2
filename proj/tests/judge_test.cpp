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

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "acueval/correlate.hpp"
#include "stub_server.hpp"
#include "test_support.hpp"

namespace acueval {
namespace {

using nlohmann::json;
using testing::reply_chat;
using testing::reply_logprob;
using testing::StubServer;

// Deterministic rating derived from the prompt bytes.
std::string rating_for(const json& request) {
  const std::string prompt = request["messages"][0]["content"];
  return std::to_string(1 + std::hash<std::string>{}(prompt) % 5);
}

JudgeConfig base_config(const StubServer& stub) {
  JudgeConfig cfg;
  cfg.endpoint = stub.endpoint();
  cfg.model = "stub-model";
  cfg.initial_backoff = std::chrono::milliseconds(1);
  return cfg;
}

Corpus small_corpus(std::size_t examples, std::size_t systems) {
  Corpus c;
  for (std::size_t e = 0; e < examples; ++e) {
    const std::string id = "e" + std::to_string(e);
    c.examples.push_back({id, "reference number " + std::to_string(e), {{"a1", "fact"}}, std::nullopt});
    for (std::size_t s = 0; s < systems; ++s) {
      c.outputs.push_back({"S" + std::to_string(s), id,
                           "candidate " + std::to_string(e) + " from " + std::to_string(s)});
    }
  }
  return c;
}

TEST(Prompts, GptScoreTemplate) {
  EXPECT_EQ(render_gptscore_prompt("R", "C"),
            "Answer the question based on the following reference summary and candidate summary."
            "\n\nQuestion: Can all of the information in the reference summary be found in the "
            "candidate summary? (a). Yes. (b). No.\n\nReference Summary: R\n\nCandidate Summary: C"
            "\n\nAnswer: Yes");
}

TEST(Prompts, GevalTemplate) {
  const std::string p = render_geval_prompt("R", "C");
  EXPECT_EQ(p.rfind("You will receive a reference summary and a candidate summary.", 0), 0u);
  EXPECT_NE(p.find("\"All of the information in the reference summary can be found in the "
                   "candidate summary.\""),
            std::string::npos);
  EXPECT_NE(p.find("1. Strongly Disagree\n\n2. Disagree\n\n3. Neither Agree nor Disagree\n\n"
                   "4. Agree\n\n5. Strongly Agree"),
            std::string::npos);
  EXPECT_NE(p.find("Reference Summary:\n\nR\n\nCandidate Summary:\n\nC\n\n"), std::string::npos);
  EXPECT_TRUE(p.ends_with("Evaluation Form (scores ONLY):\n\n- Agreement (1-5):"));
}

TEST(ParseGevalScore, Rules) {
  EXPECT_EQ(parse_geval_score("4"), 4);
  EXPECT_EQ(parse_geval_score("Agreement (1-5): 5"), 5);
  EXPECT_EQ(parse_geval_score("I would say 3."), 3);
  EXPECT_EQ(parse_geval_score("  2\n"), 2);
  EXPECT_EQ(parse_geval_score("Score 10 then 4"), 4);
  EXPECT_EQ(parse_geval_score("4.5"), std::nullopt);
  EXPECT_EQ(parse_geval_score("none"), std::nullopt);
  EXPECT_EQ(parse_geval_score("0 or 6"), std::nullopt);
}

TEST(CacheKey, DistinguishesEveryField) {
  const auto k = judge_cache_key("m", "prompt", 0.0, 0);
  EXPECT_EQ(k, judge_cache_key("m", "prompt", 0.0, 0));
  EXPECT_EQ(k.size(), 64u);
  EXPECT_NE(k, judge_cache_key("m2", "prompt", 0.0, 0));
  EXPECT_NE(k, judge_cache_key("m", "prompt!", 0.0, 0));
  EXPECT_NE(k, judge_cache_key("m", "prompt", 1.0, 0));
  EXPECT_NE(k, judge_cache_key("m", "prompt", 0.0, 1));
  EXPECT_NE(judge_cache_key("ab", "c", 0.0, 0), judge_cache_key("a", "bc", 0.0, 0));
}

TEST(JudgeConfig, Validation) {
  JudgeConfig cfg;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.endpoint = "http://localhost:1";
  cfg.model = "m";
  cfg.validate();
  cfg.samples = 5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.temperature = 1.0;
  cfg.validate();
}

TEST(GptScore, LogprobOfFinalYes) {
  StubServer stub;
  stub.on_completions([](const json& req, httplib::Response& res) {
    EXPECT_TRUE(req.at("echo").get<bool>());
    EXPECT_EQ(req.at("temperature").get<double>(), 0.0);
    reply_logprob(res, std::log(0.9));
  });
  EXPECT_NEAR(gptscore_recall("R", "C", base_config(stub)), 0.9, 1e-9);
  EXPECT_EQ(stub.bodies().at(0).at("prompt"), render_gptscore_prompt("R", "C"));
}

TEST(GptScore, MissingLogprobs) {
  StubServer stub;
  stub.on_completions([](const json&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"text":"Yes"}]})", "application/json");
  });
  try {
    gptscore_recall("R", "C", base_config(stub));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNoLogprobs);
  }
}

TEST(GptScore, WrongFinalToken) {
  StubServer stub;
  stub.on_completions([](const json&, httplib::Response& res) { reply_logprob(res, -0.1, "No"); });
  try {
    gptscore_recall("R", "C", base_config(stub));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNoLogprobs);
  }
}

TEST(Retries, ThreeRateLimitsThenSuccess) {
  StubServer stub;
  stub.on_completions([](const json&, httplib::Response& res) { reply_logprob(res, std::log(0.5)); });
  stub.fail_with({429, 429, 429});
  JudgeStats stats;
  JudgeClient client(base_config(stub), &stats);
  EXPECT_NEAR(client.gptscore_recall("R", "C"), 0.5, 1e-12);
  EXPECT_EQ(stub.requests(), 4u);
  EXPECT_EQ(stats.network_calls.load(), 4u);
}

TEST(Retries, FourRateLimitsFail) {
  StubServer stub;
  stub.on_completions([](const json&, httplib::Response& res) { reply_logprob(res, std::log(0.5)); });
  stub.fail_with({429, 429, 429, 429});
  try {
    gptscore_recall("R", "C", base_config(stub));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kRateLimited);
  }
  EXPECT_EQ(stub.requests(), 4u);
}

TEST(Retries, ServerErrorsRetriedClientErrorsNot) {
  StubServer stub;
  stub.on_chat([](const json&, httplib::Response& res) { reply_chat(res, "4"); });
  stub.fail_with({503});
  EXPECT_DOUBLE_EQ(geval_recall("R", "C", base_config(stub)), 4.0);

  stub.fail_with({400});
  try {
    geval_recall("R2", "C", base_config(stub));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTransportError);
  }
  EXPECT_EQ(stub.requests(), 3u);
}

TEST(Retries, UnreachableEndpoint) {
  JudgeConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.model = "m";
  cfg.max_retries = 1;
  cfg.initial_backoff = std::chrono::milliseconds(1);
  try {
    geval_recall("R", "C", cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTransportError);
  }
}

TEST(Geval, GreedyReplies) {
  StubServer stub;
  std::string reply = "4";
  stub.on_chat([&](const json& req, httplib::Response& res) {
    EXPECT_EQ(req.at("messages").at(0).at("content"), render_geval_prompt("R", "C"));
    reply_chat(res, reply);
  });
  EXPECT_DOUBLE_EQ(geval_recall("R", "C", base_config(stub)), 4.0);
  reply = "Agreement (1-5): 5";
  EXPECT_DOUBLE_EQ(geval_recall("R", "C", base_config(stub)), 5.0);
  reply = "I cannot rate this.";
  try {
    geval_recall("R", "C", base_config(stub));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnparseableScore);
  }
}

TEST(Geval, SampledAverage) {
  StubServer stub;
  std::atomic<int> call{0};
  const std::vector<std::string> replies = {"3", "4", "4", "5", "4"};
  stub.on_chat([&](const json& req, httplib::Response& res) {
    EXPECT_EQ(req.at("temperature").get<double>(), 1.0);
    reply_chat(res, replies.at(static_cast<std::size_t>(call++)));
  });
  const JudgeConfig cfg = config_for(Evaluator::kGevalSampled, base_config(stub));
  EXPECT_EQ(cfg.samples, 5u);
  EXPECT_DOUBLE_EQ(geval_recall("R", "C", cfg), 4.0);
}

TEST(Batch, GreedyIsReproducibleAndCached) {
  StubServer stub;
  stub.on_chat([](const json& req, httplib::Response& res) { reply_chat(res, rating_for(req)); });
  testing::TempDir cache;
  JudgeConfig cfg = base_config(stub);
  const Corpus corpus = small_corpus(6, 3);

  const ScoreMatrix uncached_a = run_judge_batch(corpus, Evaluator::kGevalGreedy, cfg);
  const ScoreMatrix uncached_b = run_judge_batch(corpus, Evaluator::kGevalGreedy, cfg);
  EXPECT_EQ(uncached_a, uncached_b);
  EXPECT_EQ(stub.requests(), 36u);

  cfg.cache_dir = cache.path();
  JudgeStats first, second;
  const ScoreMatrix a = run_judge_batch(corpus, Evaluator::kGevalGreedy, cfg, &first);
  const ScoreMatrix b = run_judge_batch(corpus, Evaluator::kGevalGreedy, cfg, &second);
  EXPECT_EQ(first.network_calls.load(), 18u);
  EXPECT_EQ(second.network_calls.load(), 0u);
  EXPECT_EQ(second.cache_hits.load(), 18u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, uncached_a);
  EXPECT_EQ(a.systems, (std::vector<std::string>{"S0", "S1", "S2"}));

  // The matrix plugs straight into the correlation framework.
  ScoreMatrix other = a;
  other.values = a.values.array() * 2.0;
  EXPECT_DOUBLE_EQ(*correlation_at(other, a, CorrKind::kPearson, CorrLevel::kSystem), 1.0);
}

TEST(Batch, ResumesFromPartialCache) {
  StubServer stub;
  stub.on_completions([](const json&, httplib::Response& res) { reply_logprob(res, std::log(0.7)); });
  testing::TempDir cache;
  JudgeConfig cfg = base_config(stub);
  cfg.cache_dir = cache.path();
  JudgeStats partial, full;
  run_judge_batch(small_corpus(5, 2), Evaluator::kGptScore, cfg, &partial);
  const ScoreMatrix m = run_judge_batch(small_corpus(10, 2), Evaluator::kGptScore, cfg, &full);
  EXPECT_EQ(partial.network_calls.load(), 10u);
  EXPECT_EQ(full.network_calls.load(), 10u);
  EXPECT_EQ(full.cache_hits.load(), 10u);
  EXPECT_NEAR(m.values.mean(), 0.7, 1e-12);
}

TEST(Batch, InFlightBound) {
  StubServer stub;
  stub.set_delay(std::chrono::milliseconds(20));
  stub.on_chat([](const json& req, httplib::Response& res) { reply_chat(res, rating_for(req)); });
  JudgeConfig cfg = base_config(stub);
  cfg.max_in_flight = 2;
  run_judge_batch(small_corpus(4, 3), Evaluator::kGevalGreedy, cfg);
  EXPECT_LE(stub.max_concurrent(), 2);
  EXPECT_EQ(stub.requests(), 12u);
}

TEST(Batch, FailureManifest) {
  StubServer stub;
  stub.on_chat([](const json& req, httplib::Response& res) {
    const std::string prompt = req["messages"][0]["content"];
    reply_chat(res, prompt.find("candidate 1 from 0") != std::string::npos ? "n/a" : "3");
  });
  try {
    run_judge_batch(small_corpus(3, 2), Evaluator::kGevalGreedy, base_config(stub));
    FAIL();
  } catch (const BatchError& e) {
    EXPECT_EQ(e.code(), Errc::kBatchFailed);
    ASSERT_EQ(e.failures().size(), 1u);
    EXPECT_EQ(e.failures()[0].example_id, "e1");
    EXPECT_EQ(e.failures()[0].system, "S0");
  }
}

TEST(Evaluator, Names) {
  for (auto e : {Evaluator::kGptScore, Evaluator::kGevalGreedy, Evaluator::kGevalSampled}) {
    EXPECT_EQ(parse_evaluator(to_string(e)), e);
  }
  EXPECT_FALSE(parse_evaluator("gpt4").has_value());
}

}  // namespace
}  // namespace acueval
