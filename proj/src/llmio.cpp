#include "coldstart/llmio.hpp"

#include <cctype>

#include "coldstart/text.hpp"

namespace coldstart::llmio {

void BackendRegistry::add(std::shared_ptr<Backend> backend, BackendLimits limits) {
  if (!backend) throw ConfigError("null backend");
  std::lock_guard lock(mu_);
  auto slot = std::make_unique<Slot>();
  slot->backend = std::move(backend);
  slot->limits = limits;
  auto id = slot->backend->id();
  slots_[id] = std::move(slot);
}

bool BackendRegistry::contains(const std::string& id) const {
  std::lock_guard lock(mu_);
  return slots_.count(id) > 0;
}

std::vector<std::string> BackendRegistry::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : slots_) out.push_back(id);
  return out;
}

BackendRegistry::Slot& BackendRegistry::slot(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = slots_.find(id);
  if (it == slots_.end()) throw ConfigError("unknown backend id: " + id);
  return *it->second;
}

Completion BackendRegistry::complete(const CompletionRequest& request) {
  if (request.max_tokens < 64) throw ArgumentError("max_tokens must be >= 64");
  Slot& s = slot(request.backend_id);

  {
    std::unique_lock lock(s.mu);
    if (s.limits.max_concurrency > 0) {
      s.cv.wait(lock, [&] { return s.in_flight < s.limits.max_concurrency; });
    }
    ++s.in_flight;
    if (s.limits.requests_per_second > 0) {
      auto now = std::chrono::steady_clock::now();
      auto start = std::max(now, s.next_start);
      s.next_start = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double>(1.0 / s.limits.requests_per_second));
      lock.unlock();
      std::this_thread::sleep_until(start);
    }
  }
  struct Release {
    Slot& s;
    ~Release() {
      {
        std::lock_guard lock(s.mu);
        --s.in_flight;
      }
      s.cv.notify_one();
    }
  } release{s};

  auto t0 = std::chrono::steady_clock::now();
  int attempts = 0;
  Completion c = with_retries(
      s.limits, "backend " + request.backend_id,
      [&] { return s.backend->complete_once(request); }, &attempts);
  c.backend_id = request.backend_id;
  c.attempts = attempts;
  c.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  std::lock_guard lock(mu_);
  usage_.push_back({c.backend_id, c.latency_ms, c.prompt_tokens, c.completion_tokens});
  return c;
}

std::vector<UsageRecord> BackendRegistry::usage() const {
  std::lock_guard lock(mu_);
  return usage_;
}

namespace {
int rough_tokens(const std::string& s) { return static_cast<int>(text::tokenize(s).size()); }
}  // namespace

Completion MockBackend::complete_once(const CompletionRequest& request) {
  Completion c;
  bool judge = request.prompt.find("\nListing A:\n") != std::string::npos;
  c.text = judge ? mock_judge(request.prompt) : mock_generate(request.prompt);
  c.prompt_tokens = rough_tokens(request.prompt);
  c.completion_tokens = rough_tokens(c.text);
  return c;
}

Completion FunctionBackend::complete_once(const CompletionRequest& request) {
  Completion c;
  c.text = fn_(request);
  c.prompt_tokens = rough_tokens(request.prompt);
  c.completion_tokens = rough_tokens(c.text);
  return c;
}

std::string api_key_env_var(const std::string& backend_id) {
  std::string name = "COLDSTART_";
  for (char ch : backend_id) {
    name.push_back(std::isalnum(static_cast<unsigned char>(ch))
                       ? static_cast<char>(std::toupper(static_cast<unsigned char>(ch)))
                       : '_');
  }
  return name + "_API_KEY";
}

GenerationOutput parse_generation(const std::string& raw) {
  auto open = raw.find('{');
  auto close = raw.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw ParseError("no JSON object in model output");
  }
  Json j;
  try {
    j = Json::parse(raw.substr(open, close - open + 1));
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON object in model output: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("model output is not a JSON object");

  auto str = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw SchemaError(key);
    return it->get<std::string>();
  };
  GenerationOutput g;
  g.justification = str("justification");
  g.generalized_template = str("generalized_template");
  g.query = str("query");
  if (text::trim(g.query).empty()) throw SchemaError("query");
  auto it = j.find("key_attributes");
  if (it == j.end() || !it->is_array() || it->empty()) throw SchemaError("key_attributes");
  for (const auto& a : *it) {
    if (!a.is_string()) throw SchemaError("key_attributes");
    g.key_attributes.push_back(a.get<std::string>());
  }
  return g;
}

Json to_json(const GenerationOutput& g) {
  return {{"justification", g.justification},
          {"generalized_template", g.generalized_template},
          {"query", g.query},
          {"key_attributes", g.key_attributes}};
}

std::string serialize(const GenerationOutput& g) { return to_json(g).dump(); }

}  // namespace coldstart::llmio
