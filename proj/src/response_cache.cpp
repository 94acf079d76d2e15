#include "selfexp/response_cache.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include "json.hpp"
#include "selfexp/errors.hpp"

namespace selfexp {
namespace {

using nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string to_json_line(const CacheRecord& record) {
  json request = json::array();
  for (const auto& m : record.request) {
    request.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  json j = {{"key", record.key},
            {"model", record.model_name},
            {"request", std::move(request)},
            {"response", record.response_text},
            {"timestamp", record.timestamp}};
  return j.dump();
}

CacheRecord parse_cache_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed cache record: ") + e.what(), e.byte);
  }
  try {
    CacheRecord r;
    r.key = j.at("key").get<std::string>();
    r.model_name = j.value("model", "");
    for (const auto& m : j.at("request")) {
      r.request.push_back(Message{parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    }
    r.response_text = j.at("response").get<std::string>();
    r.timestamp = j.value("timestamp", "");
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("cache record missing fields: ") + e.what(), 0);
  }
}

ResponseCache::ResponseCache(std::filesystem::path path, bool read_only)
    : path_(std::move(path)), read_only_(read_only) {
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        CacheRecord r = parse_cache_line(line);
        entries_.try_emplace(std::move(r.key), std::move(r.response_text));
      } catch (const ParseError& e) {
        throw LoadError(std::string("cache ") + path_.string() + ": " + e.what(), line_no);
      }
    }
  }
  if (!read_only_) {
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw ConfigError("cannot open cache file for writing: " + path_.string());
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::insert(CacheRecord record) {
  if (record.timestamp.empty()) record.timestamp = utc_timestamp();
  std::lock_guard lock(mu_);
  auto [it, inserted] = entries_.try_emplace(record.key, record.response_text);
  if (!inserted || read_only_) return;
  out_ << to_json_line(record) << '\n';
  out_.flush();
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string ResponseCache::digest() const {
  std::vector<std::pair<std::string, std::string>> sorted;
  {
    std::lock_guard lock(mu_);
    sorted.assign(entries_.begin(), entries_.end());
  }
  std::sort(sorted.begin(), sorted.end());
  std::string buf;
  for (const auto& [k, v] : sorted) {
    buf.append(k).push_back('\0');
    buf.append(v).push_back('\0');
  }
  return sha256_hex(buf);
}

CachedModel::CachedModel(std::unique_ptr<ChatModel> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedModel::do_complete(std::span<const Message> messages) {
  const std::string key = cache_key(inner_->model_name(), messages);
  if (auto hit = cache_->lookup(key)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  std::string response = inner_->complete(messages);
  cache_->insert(CacheRecord{key, std::string(inner_->model_name()),
                             std::vector<Message>(messages.begin(), messages.end()), response, {}});
  // Another thread may have raced us to the same key; the stored copy wins.
  return cache_->lookup(key).value_or(response);
}

ReplayModel::ReplayModel(std::string model_name, std::shared_ptr<ResponseCache> cache)
    : model_name_(std::move(model_name)), cache_(std::move(cache)) {}

std::string ReplayModel::do_complete(std::span<const Message> messages) {
  const std::string key = cache_key(model_name_, messages);
  if (auto hit = cache_->lookup(key)) return *hit;
  throw ReplayMissError(key);
}

}  // namespace selfexp
