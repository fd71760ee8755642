#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "coldstart/llmio.hpp"
#include "coldstart/text.hpp"

namespace coldstart::llmio {

HttpEndpoint::HttpEndpoint(HttpEndpointConfig config) : config_(std::move(config)) {
  auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("backend url needs a scheme: " + config_.url);
  auto path_start = config_.url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
  if (config_.response_pointer.empty() || config_.response_pointer[0] != '/') {
    throw ConfigError("response_pointer must be a JSON pointer: " + config_.response_pointer);
  }
}

Json HttpEndpoint::post(const Json& body) const {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env_var(config_.id).c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw TransientBackendError(config_.id + ": connection failed: " +
                                httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientBackendError(config_.id + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(config_.id + ": HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw BackendError(config_.id + ": response is not JSON: " + e.what());
  }
}

Json HttpEndpoint::extract(const Json& response) const {
  Json::json_pointer ptr(config_.response_pointer);
  if (!response.contains(ptr)) {
    throw BackendError(config_.id + ": response has no value at " + config_.response_pointer);
  }
  return response.at(ptr);
}

Completion HttpBackend::complete_once(const CompletionRequest& request) {
  const auto& cfg = endpoint_.config();
  Json body = {{"model", cfg.model},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  if (cfg.use_messages) {
    body["messages"] = Json::array({{{"role", "user"}, {"content", request.prompt}}});
  } else {
    body["prompt"] = request.prompt;
  }
  Json response = endpoint_.post(body);
  Json value = endpoint_.extract(response);
  if (!value.is_string()) throw BackendError(cfg.id + ": generated text is not a string");

  Completion c;
  c.text = value.get<std::string>();
  if (auto u = response.find("usage"); u != response.end() && u->is_object()) {
    c.prompt_tokens = u->value("prompt_tokens", 0);
    c.completion_tokens = u->value("completion_tokens", 0);
  } else {
    c.prompt_tokens = static_cast<int>(text::tokenize(request.prompt).size());
    c.completion_tokens = static_cast<int>(text::tokenize(c.text).size());
  }
  return c;
}

}  // namespace coldstart::llmio
