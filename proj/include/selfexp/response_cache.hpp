#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfexp/model_client.hpp"

namespace selfexp {

struct CacheRecord {
  std::string key;
  std::string model_name;
  std::vector<Message> request;
  std::string response_text;
  std::string timestamp;  // ISO-8601, UTC
};

std::string to_json_line(const CacheRecord& record);
// Throws ParseError on a malformed line.
CacheRecord parse_cache_line(std::string_view line);

// Append-only JSONL store of model responses, one record per key. Lookups are
// served from memory; writes are serialized and flushed per record.
class ResponseCache {
 public:
  // Loads existing records from path (a missing file is an empty cache). The
  // parent directory must exist. When read_only is set nothing is ever written.
  explicit ResponseCache(std::filesystem::path path, bool read_only = false);

  std::optional<std::string> lookup(const std::string& key) const;
  // First write for a key wins; later writes for the same key are ignored.
  void insert(CacheRecord record);

  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

  // SHA-256 over the sorted (key, response) pairs: identifies the cache
  // content independent of record order and timestamps.
  std::string digest() const;

 private:
  std::filesystem::path path_;
  bool read_only_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
  std::ofstream out_;
};

// Consults the cache first and writes through to it on a miss.
class CachedModel : public ChatModel {
 public:
  CachedModel(std::unique_ptr<ChatModel> inner, std::shared_ptr<ResponseCache> cache);

  std::string_view model_name() const override { return inner_->model_name(); }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  const ResponseCache& cache() const { return *cache_; }

 protected:
  std::string do_complete(std::span<const Message> messages) override;

 private:
  std::unique_ptr<ChatModel> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// Serves responses only from a frozen cache; a miss is a ReplayMissError.
// Never touches the network.
class ReplayModel : public ChatModel {
 public:
  ReplayModel(std::string model_name, std::shared_ptr<ResponseCache> cache);

  std::string_view model_name() const override { return model_name_; }
  const ResponseCache& cache() const { return *cache_; }

 protected:
  std::string do_complete(std::span<const Message> messages) override;

 private:
  std::string model_name_;
  std::shared_ptr<ResponseCache> cache_;
};

}  // namespace selfexp
