#include "nl2sql/llm_gateway.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <thread>

#include "nl2sql/errors.hpp"

namespace nl2sql {

using json = nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view text) {
  if (text == "system") return Role::system;
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  throw Error(ErrorCode::Config, "unknown chat role: " + std::string(text));
}

void CompletionRequest::validate() const {
  if (messages.empty()) throw Error(ErrorCode::Config, "completion request has no messages");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::Config, "temperature out of range [0, 2]");
  }
  if (max_tokens && *max_tokens <= 0) throw Error(ErrorCode::Config, "max_tokens must be positive");
}

namespace {

json messages_json(const std::vector<ChatMessage>& messages) {
  json out = json::array();
  for (const auto& m : messages) {
    out.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return out;
}

json canonical(const CompletionRequest& request) {
  return {{"model", request.model_id},
          {"messages", messages_json(request.messages)},
          {"temperature", request.temperature}};
}


std::optional<TokenUsage> usage_from_json(const json& j) {
  if (!j.is_object()) return std::nullopt;
  TokenUsage u;
  u.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
  u.completion_tokens = j.value("completion_tokens", std::int64_t{0});
  return u;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Config, "SHA-256 unavailable");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0x0F];
  }
  return out;
}

std::string digest(const CompletionRequest& request) {
  return sha256_hex(canonical(request).dump(-1, ' ', false, json::error_handler_t::replace));
}

json TranscriptEntry::to_json() const {
  json j{{"digest", digest}, {"request_summary", request_summary}, {"response_text", response_text}};
  if (usage) {
    j["usage"] = {{"prompt_tokens", usage->prompt_tokens},
                  {"completion_tokens", usage->completion_tokens}};
  }
  return j;
}

TranscriptEntry TranscriptEntry::from_json(const json& line) {
  TranscriptEntry e;
  e.digest = line.at("digest").get<std::string>();
  e.request_summary = line.value("request_summary", json::object());
  e.response_text = line.at("response_text").get<std::string>();
  if (line.contains("usage")) e.usage = usage_from_json(line.at("usage"));
  return e;
}

Transcript Transcript::load(const std::filesystem::path& path) {
  Transcript t;
  std::ifstream in(path, std::ios::binary);
  if (!in) return t;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      t.add(TranscriptEntry::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(number) +
                                     ": bad transcript line: " + e.what());
    }
  }
  return t;
}

void Transcript::add(TranscriptEntry entry) {
  queues_[entry.digest].push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

std::optional<CompletionResponse> Transcript::take(const std::string& digest) {
  auto it = queues_.find(digest);
  if (it == queues_.end() || it->second.empty()) return std::nullopt;
  const auto& entry = entries_[it->second.front()];
  it->second.pop_front();
  return CompletionResponse{entry.response_text, entry.usage};
}

std::size_t Transcript::remaining() const {
  std::size_t n = 0;
  for (const auto& [_, q] : queues_) n += q.size();
  return n;
}

Gateway::Gateway(GatewayMode mode, std::unique_ptr<Transport> transport,
                 std::optional<std::filesystem::path> transcript_path, Transcript transcript,
                 RetryPolicy retry)
    : mode_(mode),
      transport_(std::move(transport)),
      transcript_path_(std::move(transcript_path)),
      transcript_(std::move(transcript)),
      retry_(retry) {}

std::unique_ptr<Gateway> Gateway::live(std::unique_ptr<Transport> transport, RetryPolicy retry) {
  if (!transport) throw Error(ErrorCode::Config, "live gateway needs a transport");
  return std::unique_ptr<Gateway>(
      new Gateway(GatewayMode::live, std::move(transport), std::nullopt, {}, retry));
}

std::unique_ptr<Gateway> Gateway::record(std::unique_ptr<Transport> transport,
                                         std::filesystem::path transcript_path,
                                         RetryPolicy retry) {
  if (!transport) throw Error(ErrorCode::Config, "record gateway needs a transport");
  return std::unique_ptr<Gateway>(new Gateway(GatewayMode::record, std::move(transport),
                                              std::move(transcript_path), {}, retry));
}

std::unique_ptr<Gateway> Gateway::replay(Transcript transcript) {
  return std::unique_ptr<Gateway>(
      new Gateway(GatewayMode::replay, nullptr, std::nullopt, std::move(transcript), {}));
}

std::unique_ptr<Gateway> Gateway::replay(const std::filesystem::path& transcript_path) {
  if (!std::filesystem::exists(transcript_path)) {
    throw Error(ErrorCode::Config, "replay transcript not found: " + transcript_path.string());
  }
  return replay(Transcript::load(transcript_path));
}

CompletionResponse Gateway::send_with_retry(const CompletionRequest& request) {
  auto backoff = retry_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return transport_->send(request);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Transport || attempt >= retry_.max_retries) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

CompletionResponse Gateway::complete(const CompletionRequest& request) {
  request.validate();
  const auto key = digest(request);
  if (mode_ == GatewayMode::replay) {
    std::lock_guard lock(mutex_);
    if (auto hit = transcript_.take(key)) return *std::move(hit);
    throw Error(ErrorCode::ReplayMiss, "no recorded response for request digest " + key);
  }

  auto response = send_with_retry(request);
  if (mode_ == GatewayMode::record) {
    TranscriptEntry entry{key, canonical(request), response.text, response.usage};
    std::lock_guard lock(mutex_);
    std::ofstream out(*transcript_path_, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot append to " + transcript_path_->string());
    out << entry.to_json().dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    transcript_.add(std::move(entry));
  }
  return response;
}

CompletionResponse UsageMeter::complete(const CompletionRequest& request) {
  auto response = inner_.complete(request);
  std::lock_guard lock(mutex_);
  ++calls_;
  if (response.usage) total_ += *response.usage;
  return response;
}

TokenUsage UsageMeter::total() const {
  std::lock_guard lock(mutex_);
  return total_;
}

std::size_t UsageMeter::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

CompletionResponse Model::ask(const std::string& user_prompt) {
  CompletionRequest request;
  request.model_id = settings_.model_id;
  request.temperature = settings_.temperature;
  request.max_tokens = settings_.max_tokens;
  if (!settings_.system_prompt.empty()) {
    request.messages.push_back({Role::system, settings_.system_prompt});
  }
  request.messages.push_back({Role::user, user_prompt});
  return client_.complete(request);
}

}  // namespace nl2sql
