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

// Completion providers: a chat-completions HTTP client and a scripted
// provider that replays recorded completions.

#ifndef TOOLPLAN_LLM_GATEWAY_H_
#define TOOLPLAN_LLM_GATEWAY_H_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "toolplan/core_model.h"
#include "toolplan/result.h"

namespace toolplan {

struct CompletionRequest {
  std::string provider;
  std::string model;
  std::string system_prompt;  // may be empty
  std::string user_prompt;
  double temperature = 0;
  int max_tokens = 1024;
  std::vector<std::string> stop_sequences;

  // Errors: InvalidRequest.
  Status Validate() const;
  // The text a scripted provider matches against and transcripts record:
  // the system turn, a blank line, then the user turn.
  std::string CombinedPrompt() const;
};

// Decoding settings shared by every request an agent makes.
struct ModelSettings {
  std::string provider;
  std::string model;
  double temperature = 0;
  int max_tokens = 1024;

  CompletionRequest Request(std::string system_prompt, std::string user_prompt) const {
    CompletionRequest r;
    r.provider = provider;
    r.model = model;
    r.system_prompt = std::move(system_prompt);
    r.user_prompt = std::move(user_prompt);
    r.temperature = temperature;
    r.max_tokens = max_tokens;
    return r;
  }
};

struct Usage {
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
};

struct Completion {
  std::string text;
  Usage usage;
  std::chrono::microseconds latency{0};
  int attempts = 1;
};

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual Result<Completion> Complete(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
  // True when outputs are a pure function of the inputs.
  virtual bool deterministic() const { return false; }
};

// One recorded exchange. A matcher of "*" accepts any prompt; otherwise it
// must occur somewhere in the combined prompt.
struct CassetteEntry {
  std::string prompt_matcher;
  std::string completion;
  friend bool operator==(const CassetteEntry&, const CassetteEntry&) = default;
};

inline constexpr std::string_view kAnyPrompt = "*";

// Replays cassette entries. In strict order the next entry must match the
// prompt (PromptMismatch otherwise); unordered sessions take the first
// unconsumed matching entry. Consumed entries are never replayed. The
// first thread to call Complete() owns the session; calls from any other
// thread fail with SessionBusy until Release().
class ScriptedSession : public CompletionProvider {
 public:
  explicit ScriptedSession(std::vector<CassetteEntry> entries, bool strict_order = true);
  // Errors: IoError, CorruptTranscript.
  static Result<std::unique_ptr<ScriptedSession>> FromFile(const std::filesystem::path& path,
                                                           bool strict_order = true);

  Result<Completion> Complete(const CompletionRequest& request) override;
  std::string name() const override { return "scripted"; }
  bool deterministic() const override { return true; }

  size_t cursor() const;  // number of consumed entries
  size_t size() const { return entries_.size(); }
  void Release();

 private:
  const std::vector<CassetteEntry> entries_;
  const bool strict_order_;
  mutable std::mutex mu_;
  std::vector<bool> consumed_;
  size_t cursor_ = 0;
  std::optional<std::thread::id> owner_;
};

Result<std::vector<CassetteEntry>> ReadCassette(const std::filesystem::path& path);
Status WriteCassette(const std::filesystem::path& path, const std::vector<CassetteEntry>& entries);

// One entry per model turn (non-empty prompt) across `runs`, matched on the
// full prompt. Errors: EmptyTranscript.
Result<std::vector<CassetteEntry>> RecordCassette(const std::vector<Transcript>& runs);

struct HttpProviderConfig {
  std::string name = "http";
  std::string endpoint;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // name of the variable holding the key
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::milliseconds retry_budget{30000};  // total sleep across retries
  int max_concurrency = 4;

  // Keys: endpoint, path, model, api_key_env, connect_timeout_ms,
  // read_timeout_ms, max_retries, initial_backoff_ms, max_backoff_ms,
  // retry_budget_ms, max_concurrency. A literal "api_key" is rejected.
  static Result<HttpProviderConfig> FromJson(const Json& j);
};

// Sleep before each retry: doubling from initial_backoff, capped at
// max_backoff, truncated once the running total would exceed retry_budget.
std::vector<std::chrono::milliseconds> BackoffSchedule(const HttpProviderConfig& config);

class HttpProvider : public CompletionProvider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  Result<Completion> Complete(const CompletionRequest& request) override;
  std::string name() const override { return config_.name; }
  const HttpProviderConfig& config() const { return config_; }

 private:
  struct Attempt;
  Attempt Send(const std::string& body, const std::string& key) const;

  HttpProviderConfig config_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

}  // namespace toolplan

#endif  // TOOLPLAN_LLM_GATEWAY_H_
