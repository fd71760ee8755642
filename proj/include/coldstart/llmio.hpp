#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <string>
#include <vector>

#include <json.hpp>

#include "coldstart/errors.hpp"

namespace coldstart::llmio {

using Json = nlohmann::json;

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 256;  // >= 64
  std::string backend_id;
};

struct Completion {
  std::string text;
  std::string backend_id;
  double latency_ms = 0;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int attempts = 1;
};

struct UsageRecord {
  std::string backend_id;
  double latency_ms = 0;
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

// Raised by backends for failures worth retrying (connection loss, 429, 5xx).
class TransientBackendError : public BackendError {
 public:
  using BackendError::BackendError;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& id() const = 0;
  // One attempt. Throws TransientBackendError for retryable failures.
  virtual Completion complete_once(const CompletionRequest& request) = 0;
};

struct BackendLimits {
  double requests_per_second = 0;  // 0 = unlimited
  int max_concurrency = 0;         // 0 = unlimited
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
};

// Runs `attempt` until it succeeds or max_retries retries have failed with
// TransientBackendError; the final failure is rethrown as BackendError
// carrying the last cause. `attempts` receives the number of tries.
template <typename Fn>
auto with_retries(const BackendLimits& limits, const std::string& what, Fn&& attempt,
                  int* attempts = nullptr) -> decltype(attempt()) {
  auto backoff = limits.initial_backoff;
  for (int tries = 1;; ++tries) {
    if (attempts) *attempts = tries;
    try {
      return attempt();
    } catch (const TransientBackendError& e) {
      if (tries > limits.max_retries) {
        throw BackendError(what + ": retries exhausted after " + std::to_string(tries) +
                           " attempts: " + e.what());
      }
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(backoff.count()) * limits.backoff_multiplier));
  }
}

// Backends keyed by id. complete() is safe to call from many threads; each
// backend's rate limit and concurrency cap are enforced here.
class BackendRegistry {
 public:
  void add(std::shared_ptr<Backend> backend, BackendLimits limits = {});
  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;

  Completion complete(const CompletionRequest& request);
  std::vector<UsageRecord> usage() const;

 private:
  struct Slot {
    std::shared_ptr<Backend> backend;
    BackendLimits limits;
    std::mutex mu;
    std::condition_variable cv;
    int in_flight = 0;
    std::chrono::steady_clock::time_point next_start{};
  };

  Slot& slot(const std::string& id) const;

  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::vector<UsageRecord> usage_;
};

// Deterministic offline backend: a pure function of the prompt text. Handles
// both generation prompts and judge prompts produced by promptkit.
class MockBackend : public Backend {
 public:
  explicit MockBackend(std::string id = "mock") : id_(std::move(id)) {}
  const std::string& id() const override { return id_; }
  Completion complete_once(const CompletionRequest& request) override;

 private:
  std::string id_;
};

// Answers generation prompts from the Listing 1/Listing 2 blocks, the
// PLATFORM_TERMS line and the length line; throws MockError when they are
// missing.
std::string mock_generate(const std::string& prompt);

// Token-overlap judge: the listing sharing more distinct query tokens wins.
std::string mock_judge(const std::string& prompt);

// Wraps a callable; used for canned or scripted backends.
class FunctionBackend : public Backend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  FunctionBackend(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
  const std::string& id() const override { return id_; }
  Completion complete_once(const CompletionRequest& request) override;

 private:
  std::string id_;
  Fn fn_;
};

struct HttpEndpointConfig {
  std::string id;
  std::string url;  // http(s)://host[:port]/path
  std::string model;
  std::string response_pointer = "/choices/0/text";
  bool use_messages = false;  // send chat-style messages instead of a raw prompt
  int timeout_seconds = 60;
};

// COLDSTART_<ID>_API_KEY, with the id uppercased and non-alphanumerics as '_'.
std::string api_key_env_var(const std::string& backend_id);

// JSON-over-HTTP POST with bearer auth from the environment.
class HttpEndpoint {
 public:
  explicit HttpEndpoint(HttpEndpointConfig config);
  const HttpEndpointConfig& config() const { return config_; }
  // Throws TransientBackendError on connection failure, 429 or 5xx and
  // BackendError on other non-2xx statuses or unparsable bodies.
  Json post(const Json& body) const;
  // Value at the configured response pointer.
  Json extract(const Json& response) const;

 private:
  HttpEndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpEndpointConfig config) : endpoint_(std::move(config)) {}
  const std::string& id() const override { return endpoint_.config().id; }
  Completion complete_once(const CompletionRequest& request) override;

 private:
  HttpEndpoint endpoint_;
};

struct GenerationOutput {
  std::string justification;
  std::string generalized_template;
  std::string query;
  std::vector<std::string> key_attributes;

  bool operator==(const GenerationOutput&) const = default;
};

// Tolerates prose or code fences around a single JSON object by extracting
// the outermost braced span. Throws ParseError when no object is present and
// SchemaError naming the first missing or invalid field.
GenerationOutput parse_generation(const std::string& raw);

Json to_json(const GenerationOutput& g);
std::string serialize(const GenerationOutput& g);

}  // namespace coldstart::llmio
