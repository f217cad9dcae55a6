#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nl2sql {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct CompletionRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::optional<int> max_tokens;

  // Throws Error(Config) when messages are empty or temperature leaves [0, 2].
  void validate() const;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

struct CompletionResponse {
  std::string text;
  std::optional<TokenUsage> usage;
};

// Hex SHA-256 over (model_id, messages, temperature). max_tokens is ignored.
std::string digest(const CompletionRequest& request);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// One network attempt. Throws Error(Transport) or Error(Service).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual CompletionResponse send(const CompletionRequest& request) = 0;
};

struct HttpSettings {
  std::string api_base;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::chrono::seconds timeout{120};

  // LLM_API_BASE / LLM_API_KEY.
  static HttpSettings from_env();
};

// POST <base>/chat/completions with {model, messages, temperature, max_tokens?}.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(HttpSettings settings);
  CompletionResponse send(const CompletionRequest& request) override;

  static nlohmann::json request_body(const CompletionRequest& request);
  static CompletionResponse parse_response(const std::string& body);

 private:
  HttpSettings settings_;
};

struct TranscriptEntry {
  std::string digest;
  nlohmann::json request_summary;
  std::string response_text;
  std::optional<TokenUsage> usage;

  nlohmann::json to_json() const;
  static TranscriptEntry from_json(const nlohmann::json& line);
};

// digest -> FIFO of stored responses.
class Transcript {
 public:
  // A missing file yields an empty transcript.
  static Transcript load(const std::filesystem::path& path);

  void add(TranscriptEntry entry);
  std::optional<CompletionResponse> take(const std::string& digest);
  std::size_t remaining() const;
  const std::vector<TranscriptEntry>& entries() const { return entries_; }

 private:
  std::vector<TranscriptEntry> entries_;
  std::map<std::string, std::deque<std::size_t>> queues_;
};

enum class GatewayMode { live, record, replay };

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
};

// Live calls go to the transport; record additionally appends each exchange
// to a JSON Lines transcript; replay serves stored responses only.
class Gateway : public LlmClient {
 public:
  static std::unique_ptr<Gateway> live(std::unique_ptr<Transport> transport,
                                       RetryPolicy retry = {});
  static std::unique_ptr<Gateway> record(std::unique_ptr<Transport> transport,
                                         std::filesystem::path transcript_path,
                                         RetryPolicy retry = {});
  static std::unique_ptr<Gateway> replay(Transcript transcript);
  static std::unique_ptr<Gateway> replay(const std::filesystem::path& transcript_path);

  CompletionResponse complete(const CompletionRequest& request) override;

  GatewayMode mode() const { return mode_; }

 private:
  Gateway(GatewayMode mode, std::unique_ptr<Transport> transport,
          std::optional<std::filesystem::path> transcript_path, Transcript transcript,
          RetryPolicy retry);

  CompletionResponse send_with_retry(const CompletionRequest& request);

  GatewayMode mode_;
  std::unique_ptr<Transport> transport_;
  std::optional<std::filesystem::path> transcript_path_;
  Transcript transcript_;
  RetryPolicy retry_;
  std::mutex mutex_;
};

// Sums token usage over every call forwarded to the wrapped client.
class UsageMeter : public LlmClient {
 public:
  explicit UsageMeter(LlmClient& inner) : inner_(inner) {}

  CompletionResponse complete(const CompletionRequest& request) override;

  TokenUsage total() const;
  std::size_t calls() const;

 private:
  LlmClient& inner_;
  mutable std::mutex mutex_;
  TokenUsage total_;
  std::size_t calls_ = 0;
};

inline constexpr double kZeroTemperature = 0.0;
inline constexpr double kLowTemperaturePreset = 0.1;

struct LlmSettings {
  std::string model_id = "gpt-4";
  double temperature = kZeroTemperature;
  std::optional<int> max_tokens;
  std::string system_prompt;  // sent as a leading system message when non-empty
};

// A client bound to fixed request settings; what the pipeline stages talk to.
class Model {
 public:
  Model(LlmClient& client, LlmSettings settings)
      : client_(client), settings_(std::move(settings)) {}

  CompletionResponse ask(const std::string& user_prompt);
  const LlmSettings& settings() const { return settings_; }

 private:
  LlmClient& client_;
  LlmSettings settings_;
};

}  // namespace nl2sql
