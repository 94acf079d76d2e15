#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfexp {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role r);
Role parse_role(std::string_view name);

struct Message {
  Role role;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

// Throws InvalidArgument unless the list is one system message followed by
// alternating user/assistant messages ending with a user message, all with
// non-empty content.
void validate_conversation(std::span<const Message> messages);

// The single context string an auto-regressive model conditions on:
// "System: ... User: ... Assistant: ... User: ... Assistant:".
std::string flatten_context(std::span<const Message> messages);

// Canonical serialization hashed into cache keys.
std::string canonical_request(std::string_view model_name, std::span<const Message> messages);
// Lower-case hex SHA-256 of canonical_request.
std::string cache_key(std::string_view model_name, std::span<const Message> messages);
std::string sha256_hex(std::string_view data);

// A chat-completion function g(context) -> generated text. Implementations
// must be safe to call from several threads.
class ChatModel {
 public:
  virtual ~ChatModel() = default;

  // Validates the conversation shape, then generates the assistant reply.
  std::string complete(std::span<const Message> messages);

  virtual std::string_view model_name() const = 0;

 protected:
  virtual std::string do_complete(std::span<const Message> messages) = 0;
};

enum class Backend { kRemote, kOracle, kReplay };

std::string_view to_string(Backend b);
Backend parse_backend(std::string_view name);

struct ModelConfig {
  Backend backend = Backend::kOracle;
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  // Empty selects the backend default (see resolved_model_name).
  std::string model_name;
  // Greedy decoding only; any other value is rejected by make_model.
  double temperature = 0.0;
  std::uint64_t seed = 0;
  int max_concurrency = 4;
  // Empty means no response cache (oracle backend only).
  std::string cache_path;
  std::string api_key_env = "OPENAI_API_KEY";
  int max_attempts = 3;
  int initial_backoff_ms = 1000;
  int timeout_seconds = 120;
  // Oracle backend: token<TAB>weight file; empty selects the built-in lexicon.
  std::string lexicon_path;
  double oracle_bias = 0.5;
};

// model_name, or "gpt-3.5-turbo" for remote and "lexicon-oracle" for the
// oracle and replay backends when it is empty.
std::string resolved_model_name(const ModelConfig& config);

// Builds the backend stack described by config (remote or oracle with a
// write-through cache when cache_path is set; replay serves only from the
// cache). Throws ConfigError on an unusable configuration.
std::unique_ptr<ChatModel> make_model(const ModelConfig& config);

}  // namespace selfexp
