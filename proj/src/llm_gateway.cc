//
// Copyright 2026 The toolplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "toolplan/llm_gateway.h"

#include <cstdlib>
#include <fstream>
#include <utility>

#include "httplib.h"

namespace toolplan {

Status CompletionRequest::Validate() const {
  if (Trim(user_prompt).empty()) {
    return Error(ErrorCode::kInvalidRequest, "user prompt is empty", "user_prompt");
  }
  if (!(temperature >= 0 && temperature <= 2)) {
    return Error(ErrorCode::kInvalidRequest, "temperature must lie in [0, 2]", "temperature");
  }
  if (max_tokens <= 0) {
    return Error(ErrorCode::kInvalidRequest, "max_tokens must be positive", "max_tokens");
  }
  if (stop_sequences.size() > 4) {
    return Error(ErrorCode::kInvalidRequest, "at most 4 stop sequences", "stop_sequences");
  }
  return Status::Ok();
}

std::string CompletionRequest::CombinedPrompt() const {
  if (system_prompt.empty()) return user_prompt;
  return system_prompt + "\n\n" + user_prompt;
}

// ---------------------------------------------------------------------------
// Scripted provider

ScriptedSession::ScriptedSession(std::vector<CassetteEntry> entries, bool strict_order)
    : entries_(std::move(entries)), strict_order_(strict_order), consumed_(entries_.size()) {}

Result<std::unique_ptr<ScriptedSession>> ScriptedSession::FromFile(
    const std::filesystem::path& path, bool strict_order) {
  TOOLPLAN_ASSIGN_OR_RETURN(auto entries, ReadCassette(path));
  return std::make_unique<ScriptedSession>(std::move(entries), strict_order);
}

size_t ScriptedSession::cursor() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cursor_;
}

void ScriptedSession::Release() {
  std::lock_guard<std::mutex> lock(mu_);
  owner_.reset();
}

Result<Completion> ScriptedSession::Complete(const CompletionRequest& request) {
  TOOLPLAN_RETURN_IF_ERROR(request.Validate());
  const auto start = std::chrono::steady_clock::now();
  std::lock_guard<std::mutex> lock(mu_);
  if (owner_ && *owner_ != std::this_thread::get_id()) {
    return Error(ErrorCode::kSessionBusy, "scripted session is owned by another thread");
  }
  owner_ = std::this_thread::get_id();
  if (cursor_ >= entries_.size()) {
    return Error(ErrorCode::kScriptExhausted,
                 "all " + std::to_string(entries_.size()) + " entries consumed");
  }
  const std::string prompt = request.CombinedPrompt();
  auto matches = [&prompt](const CassetteEntry& e) {
    return e.prompt_matcher == kAnyPrompt || prompt.find(e.prompt_matcher) != std::string::npos;
  };
  std::optional<size_t> hit;
  if (strict_order_) {
    // Entries are consumed front to back, so the cursor is the next one.
    if (!matches(entries_[cursor_])) {
      return Error(ErrorCode::kPromptMismatch, "prompt does not contain the expected matcher")
          .WithIndex(static_cast<int64_t>(cursor_));
    }
    hit = cursor_;
  } else {
    for (size_t i = 0; i < entries_.size(); ++i) {
      if (!consumed_[i] && matches(entries_[i])) {
        hit = i;
        break;
      }
    }
    if (!hit) {
      return Error(ErrorCode::kPromptMismatch, "no unconsumed entry matches the prompt");
    }
  }
  consumed_[*hit] = true;
  ++cursor_;
  Completion c;
  c.text = entries_[*hit].completion;
  c.latency = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - start);
  return c;
}

Result<std::vector<CassetteEntry>> ReadCassette(const std::filesystem::path& path) {
  TOOLPLAN_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  std::vector<CassetteEntry> out;
  size_t pos = 0;
  int64_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("prompt_matcher") ||
        !j.contains("completion") || !j["prompt_matcher"].is_string() ||
        !j["completion"].is_string()) {
      return Error(ErrorCode::kCorruptTranscript, "malformed cassette entry", path.string())
          .WithIndex(line_no);
    }
    out.push_back({j["prompt_matcher"].get<std::string>(), j["completion"].get<std::string>()});
  }
  return out;
}

Status WriteCassette(const std::filesystem::path& path,
                     const std::vector<CassetteEntry>& entries) {
  std::string text;
  for (const CassetteEntry& e : entries) {
    text += Json{{"prompt_matcher", e.prompt_matcher}, {"completion", e.completion}}.dump(
                -1, ' ', false, Json::error_handler_t::replace) +
            "\n";
  }
  return WriteFile(path, text);
}

Result<std::vector<CassetteEntry>> RecordCassette(const std::vector<Transcript>& runs) {
  std::vector<CassetteEntry> out;
  for (const Transcript& t : runs) {
    for (const TurnRecord& turn : t.entries()) {
      if (turn.prompt.empty()) continue;
      out.push_back({turn.prompt, turn.completion});
    }
  }
  if (out.empty()) return Error(ErrorCode::kEmptyTranscript, "no model turns to record");
  return out;
}

// ---------------------------------------------------------------------------
// HTTP provider

Result<HttpProviderConfig> HttpProviderConfig::FromJson(const Json& j) {
  if (!j.is_object()) return Error(ErrorCode::kInvalidArgument, "provider config must be an object");
  if (j.contains("api_key")) {
    return Error(ErrorCode::kInvalidArgument,
                 "credentials are not read from config files; name a variable in api_key_env",
                 "api_key");
  }
  HttpProviderConfig c;
  try {
    c.name = j.value("name", c.name);
    c.endpoint = j.at("endpoint").get<std::string>();
    c.path = j.value("path", c.path);
    c.model = j.at("model").get<std::string>();
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    auto ms = [&j](const char* key, std::chrono::milliseconds def) {
      return std::chrono::milliseconds(j.value(key, static_cast<int64_t>(def.count())));
    };
    c.connect_timeout = ms("connect_timeout_ms", c.connect_timeout);
    c.read_timeout = ms("read_timeout_ms", c.read_timeout);
    c.initial_backoff = ms("initial_backoff_ms", c.initial_backoff);
    c.max_backoff = ms("max_backoff_ms", c.max_backoff);
    c.retry_budget = ms("retry_budget_ms", c.retry_budget);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  } catch (const Json::exception& e) {
    return Error(ErrorCode::kInvalidArgument, e.what());
  }
  if (c.endpoint.empty()) return Error(ErrorCode::kInvalidArgument, "endpoint is empty", "endpoint");
  if (c.max_retries < 0 || c.max_concurrency < 1 || c.initial_backoff.count() < 0 ||
      c.max_backoff < c.initial_backoff || c.retry_budget.count() < 0) {
    return Error(ErrorCode::kInvalidArgument, "retry or concurrency settings out of range");
  }
  return c;
}

std::vector<std::chrono::milliseconds> BackoffSchedule(const HttpProviderConfig& config) {
  std::vector<std::chrono::milliseconds> out;
  std::chrono::milliseconds next = config.initial_backoff;
  std::chrono::milliseconds total{0};
  for (int i = 0; i < config.max_retries; ++i) {
    const auto delay = std::min(next, config.max_backoff);
    if (total + delay > config.retry_budget) break;
    out.push_back(delay);
    total += delay;
    next = delay * 2;
  }
  return out;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {}

struct HttpProvider::Attempt {
  enum class Kind { kOk, kRetry, kFatal } kind = Kind::kFatal;
  Error error{ErrorCode::kTransportError, ""};
  std::string body;
};

HttpProvider::Attempt HttpProvider::Send(const std::string& body, const std::string& key) const {
  Attempt a;
  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.connect_timeout);
  client.set_read_timeout(config_.read_timeout);
  client.set_write_timeout(config_.read_timeout);
  httplib::Headers headers;
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
  auto res = client.Post(config_.path, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    a.kind = Attempt::Kind::kRetry;
    a.error = Error(err == httplib::Error::Connection || err == httplib::Error::Read ||
                            err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout
                        ? ErrorCode::kTimeout
                        : ErrorCode::kTransportError,
                    "request failed: " + httplib::to_string(err), config_.endpoint);
    return a;
  }
  const int status = res->status;
  if (status == 200) {
    a.kind = Attempt::Kind::kOk;
    a.body = res->body;
    return a;
  }
  const std::string detail = "HTTP " + std::to_string(status);
  if (status == 401 || status == 403) {
    a.error = Error(ErrorCode::kAuthFailure, detail, config_.endpoint);
  } else if (status == 429) {
    a.kind = Attempt::Kind::kRetry;
    a.error = Error(ErrorCode::kRateLimited, detail, config_.endpoint);
  } else if (status == 408 || status == 504) {
    a.kind = Attempt::Kind::kRetry;
    a.error = Error(ErrorCode::kTimeout, detail, config_.endpoint);
  } else if (status >= 500) {
    a.kind = Attempt::Kind::kRetry;
    a.error = Error(ErrorCode::kTransportError, detail, config_.endpoint);
  } else {
    a.error = Error(ErrorCode::kInvalidRequest, detail + ": " + res->body.substr(0, 200),
                    config_.endpoint);
  }
  return a;
}

Result<Completion> HttpProvider::Complete(const CompletionRequest& request) {
  TOOLPLAN_RETURN_IF_ERROR(request.Validate());
  std::string key;
  if (!config_.api_key_env.empty()) {
    const char* v = std::getenv(config_.api_key_env.c_str());
    if (v == nullptr || *v == '\0') {
      return Error(ErrorCode::kAuthFailure, "credential variable is not set", config_.api_key_env);
    }
    key = v;
  }
  Json messages = Json::array();
  if (!request.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  Json payload{{"model", request.model.empty() ? config_.model : request.model},
               {"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  if (!request.stop_sequences.empty()) payload["stop"] = request.stop_sequences;
  const std::string body = payload.dump(-1, ' ', false, Json::error_handler_t::replace);

  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return in_flight_ < config_.max_concurrency; });
    ++in_flight_;
  }
  struct Slot {
    HttpProvider* p;
    ~Slot() {
      {
        std::lock_guard<std::mutex> lock(p->mu_);
        --p->in_flight_;
      }
      p->cv_.notify_one();
    }
  } slot{this};

  const auto start = std::chrono::steady_clock::now();
  const auto schedule = BackoffSchedule(config_);
  Attempt attempt;
  int attempts = 0;
  for (size_t i = 0;; ++i) {
    ++attempts;
    attempt = Send(body, key);
    if (attempt.kind != Attempt::Kind::kRetry || i >= schedule.size()) break;
    std::this_thread::sleep_for(schedule[i]);
  }
  if (attempt.kind != Attempt::Kind::kOk) {
    Error e = std::move(attempt.error);
    if (attempts > 1) e.message += " after " + std::to_string(attempts) + " attempts";
    return e;
  }
  Json j = Json::parse(attempt.body, nullptr, false);
  if (j.is_discarded()) return Error(ErrorCode::kTransportError, "response is not JSON");
  Completion c;
  try {
    c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception&) {
    return Error(ErrorCode::kTransportError, "response has no choices[0].message.content");
  }
  if (j.contains("usage") && j["usage"].is_object()) {
    c.usage.prompt_tokens = j["usage"].value("prompt_tokens", int64_t{0});
    c.usage.completion_tokens = j["usage"].value("completion_tokens", int64_t{0});
  }
  c.attempts = attempts;
  c.latency = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - start);
  return c;
}

}  // namespace toolplan
