#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "nl2sql/errors.hpp"
#include "nl2sql/llm_gateway.hpp"

namespace nl2sql {

using json = nlohmann::json;

HttpSettings HttpSettings::from_env() {
  HttpSettings s;
  if (const char* base = std::getenv("LLM_API_BASE")) s.api_base = base;
  if (const char* key = std::getenv("LLM_API_KEY")) s.api_key = key;
  return s;
}

HttpTransport::HttpTransport(HttpSettings settings) : settings_(std::move(settings)) {
  if (settings_.api_base.empty()) {
    throw Error(ErrorCode::Config, "LLM_API_BASE is not set; live mode needs an endpoint");
  }
}

json HttpTransport::request_body(const CompletionRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  json body{{"model", request.model_id},
            {"messages", std::move(messages)},
            {"temperature", request.temperature}};
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
  return body;
}

CompletionResponse HttpTransport::parse_response(const std::string& body) {
  try {
    const auto j = json::parse(body);
    CompletionResponse out;
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      TokenUsage u;
      u.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
      u.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
      out.usage = u;
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Service, std::string("unexpected completion payload: ") + e.what());
  }
}

CompletionResponse HttpTransport::send(const CompletionRequest& request) {
  // Split "https://host[:port]/prefix" into the client origin and path prefix.
  const auto scheme_end = settings_.api_base.find("://");
  const auto path_start = settings_.api_base.find(
      '/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = settings_.api_base.substr(0, path_start);
  std::string prefix =
      path_start == std::string::npos ? std::string() : settings_.api_base.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  client.set_connection_timeout(settings_.timeout);
  client.set_read_timeout(settings_.timeout);
  client.set_write_timeout(settings_.timeout);
  httplib::Headers headers;
  if (!settings_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + settings_.api_key);
  }

  const auto body = request_body(request).dump(-1, ' ', false, json::error_handler_t::replace);
  auto res = client.Post(prefix + "/chat/completions", headers, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::Transport, "request to " + settings_.api_base +
                                          " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::Service,
                "HTTP " + std::to_string(res->status) + " from completion service: " + res->body);
  }
  return parse_response(res->body);
}

}  // namespace nl2sql
