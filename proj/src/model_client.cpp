#include "selfexp/model_client.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>

#include "selfexp/errors.hpp"
#include "selfexp/lexicon_oracle.hpp"
#include "selfexp/remote_model.hpp"
#include "selfexp/response_cache.hpp"

namespace selfexp {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "unknown";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::kSystem;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  throw InvalidArgument("unknown message role '" + std::string(name) + "'");
}

void validate_conversation(std::span<const Message> messages) {
  if (messages.empty()) throw InvalidArgument("conversation is empty");
  if (messages.front().role != Role::kSystem) {
    throw InvalidArgument("conversation must start with a system message");
  }
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (messages[i].content.empty()) {
      throw InvalidArgument("message " + std::to_string(i) + " has empty content");
    }
    if (i == 0) continue;
    const Role expected = (i % 2 == 1) ? Role::kUser : Role::kAssistant;
    if (messages[i].role != expected) {
      throw InvalidArgument("message " + std::to_string(i) + " should have role " +
                            std::string(to_string(expected)));
    }
  }
  if (messages.back().role != Role::kUser) {
    throw InvalidArgument("conversation must end with a user message");
  }
}

std::string flatten_context(std::span<const Message> messages) {
  std::string out;
  for (const auto& m : messages) {
    switch (m.role) {
      case Role::kSystem:
        out += "System: ";
        break;
      case Role::kUser:
        out += "User: ";
        break;
      case Role::kAssistant:
        out += "Assistant: ";
        break;
    }
    out += m.content;
    out += ' ';
  }
  out += "Assistant:";
  return out;
}

std::string canonical_request(std::string_view model_name, std::span<const Message> messages) {
  std::string out = "model:";
  out.append(model_name).push_back('\n');
  for (const auto& m : messages) {
    out.append(to_string(m.role)).push_back('\n');
    out.append(m.content).push_back('\0');
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string cache_key(std::string_view model_name, std::span<const Message> messages) {
  return sha256_hex(canonical_request(model_name, messages));
}

std::string ChatModel::complete(std::span<const Message> messages) {
  validate_conversation(messages);
  return do_complete(messages);
}

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::kRemote:
      return "remote";
    case Backend::kOracle:
      return "oracle";
    case Backend::kReplay:
      return "replay";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "remote") return Backend::kRemote;
  if (name == "oracle") return Backend::kOracle;
  if (name == "replay") return Backend::kReplay;
  throw ConfigError("unknown backend '" + std::string(name) + "' (expected remote, oracle or replay)");
}

namespace {

std::shared_ptr<ResponseCache> open_cache(const std::string& path, bool read_only) {
  const std::filesystem::path p(path);
  const auto parent = p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
  if (!std::filesystem::is_directory(parent)) {
    throw ConfigError("cache directory does not exist: " + parent.string());
  }
  if (read_only && !std::filesystem::exists(p)) {
    throw ConfigError("replay cache file does not exist: " + path);
  }
  return std::make_shared<ResponseCache>(p, read_only);
}

}  // namespace

std::string resolved_model_name(const ModelConfig& config) {
  if (!config.model_name.empty()) return config.model_name;
  return config.backend == Backend::kRemote ? "gpt-3.5-turbo" : "lexicon-oracle";
}

std::unique_ptr<ChatModel> make_model(const ModelConfig& config) {
  if (config.temperature != 0.0) {
    throw ConfigError("temperature must be 0 (greedy decoding)");
  }
  if (config.max_concurrency < 1) throw ConfigError("max_concurrency must be positive");

  switch (config.backend) {
    case Backend::kReplay: {
      if (config.cache_path.empty()) throw ConfigError("replay backend needs a cache path");
      return std::make_unique<ReplayModel>(resolved_model_name(config), open_cache(config.cache_path, true));
    }
    case Backend::kOracle: {
      LexiconOracle oracle = config.lexicon_path.empty()
                                 ? LexiconOracle::BuiltIn(config.oracle_bias)
                                 : LexiconOracle::FromFile(config.lexicon_path, config.oracle_bias);
      auto model = std::make_unique<OracleChatModel>(std::move(oracle), resolved_model_name(config));
      if (config.cache_path.empty()) return model;
      return std::make_unique<CachedModel>(std::move(model), open_cache(config.cache_path, false));
    }
    case Backend::kRemote: {
      if (config.cache_path.empty()) throw ConfigError("remote backend needs a cache path");
      auto cache = open_cache(config.cache_path, false);
      const char* key = std::getenv(config.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + config.api_key_env + " is not set");
      }
      RetryPolicy retry{config.max_attempts, std::chrono::milliseconds(config.initial_backoff_ms)};
      auto remote = std::make_unique<RemoteChatModel>(config.endpoint_url, resolved_model_name(config), key,
                                                      config.max_concurrency, retry,
                                                      make_http_transport(config.timeout_seconds));
      return std::make_unique<CachedModel>(std::move(remote), std::move(cache));
    }
  }
  throw ConfigError("unsupported backend");
}

}  // namespace selfexp
