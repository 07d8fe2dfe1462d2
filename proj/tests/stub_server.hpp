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

#ifndef ACUEVAL_TESTS_STUB_SERVER_HPP_
#define ACUEVAL_TESTS_STUB_SERVER_HPP_

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace acueval::testing {

using nlohmann::json;

// In-process stand-in for a completion service.
class StubServer {
 public:
  using Handler = std::function<void(const json& request, httplib::Response& res)>;

  StubServer() {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(completions_, req, res);
    });
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(chat_, req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  void on_completions(Handler h) { completions_ = std::move(h); }
  void on_chat(Handler h) { chat_ = std::move(h); }
  // Statuses returned (in order) before handlers run.
  void fail_with(std::vector<int> statuses) {
    std::lock_guard lock(mu_);
    failures_.assign(statuses.begin(), statuses.end());
  }
  void set_delay(std::chrono::milliseconds d) { delay_ = d; }

  std::size_t requests() const { return requests_; }
  int max_concurrent() const { return max_concurrent_; }
  std::vector<json> bodies() const {
    std::lock_guard lock(mu_);
    return bodies_;
  }

 private:
  void handle(const Handler& h, const httplib::Request& req, httplib::Response& res) {
    const int now = ++concurrent_;
    int seen = max_concurrent_;
    while (now > seen && !max_concurrent_.compare_exchange_weak(seen, now)) {
    }
    ++requests_;
    std::this_thread::sleep_for(delay_);
    json body = json::parse(req.body);
    int status = 0;
    {
      std::lock_guard lock(mu_);
      bodies_.push_back(body);
      if (!failures_.empty()) {
        status = failures_.front();
        failures_.pop_front();
      }
    }
    if (status) {
      res.status = status;
    } else {
      h(body, res);
    }
    --concurrent_;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  Handler completions_ = [](const json&, httplib::Response& res) { res.status = 404; };
  Handler chat_ = [](const json&, httplib::Response& res) { res.status = 404; };
  mutable std::mutex mu_;
  std::deque<int> failures_;
  std::vector<json> bodies_;
  std::chrono::milliseconds delay_{0};
  std::atomic<std::size_t> requests_{0};
  std::atomic<int> concurrent_{0};
  std::atomic<int> max_concurrent_{0};
};

inline void reply_logprob(httplib::Response& res, double logprob, const std::string& last = "Yes") {
  const json reply = {{"choices",
                       {{{"text", "..."},
                         {"logprobs",
                          {{"tokens", {"Answer", ":", " " + last}},
                           {"token_logprobs", {nullptr, -0.5, logprob}}}}}}}};
  res.set_content(reply.dump(), "application/json");
}

inline void reply_chat(httplib::Response& res, const std::string& content) {
  const json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  res.set_content(reply.dump(), "application/json");
}

}  // namespace acueval::testing

#endif  // ACUEVAL_TESTS_STUB_SERVER_HPP_
