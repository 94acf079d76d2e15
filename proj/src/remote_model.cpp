#include "selfexp/remote_model.hpp"

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "selfexp/errors.hpp"

namespace selfexp {
namespace {

using nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL has no scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(int timeout_seconds) : timeout_seconds_(timeout_seconds) {}

  HttpResponse post_json(const std::string& url, const std::string& body,
                         const std::string& bearer_token) override {
    const SplitUrl parts = split_url(url);
    // One client per call.
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    client.set_write_timeout(timeout_seconds_);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = client.Post(parts.path, headers, body, "application/json");
    if (!res) return HttpResponse{0, {}, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body, {}};
  }

 private:
  int timeout_seconds_;
};

bool retryable(const HttpResponse& r) { return r.status == 0 || r.status == 429 || r.status >= 500; }

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(int timeout_seconds) {
  return std::make_unique<HttplibTransport>(timeout_seconds);
}

std::string chat_request_body(std::string_view model_name, double temperature,
                              std::span<const Message> messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  json body = {{"model", model_name}, {"temperature", temperature}, {"messages", std::move(msgs)}};
  return body.dump();
}

std::string extract_chat_content(std::string_view response_body) {
  json j;
  try {
    j = json::parse(response_body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("chat response is not JSON: ") + e.what(), e.byte);
  }
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ParseError("chat response has no choices[0].message.content", 0);
  }
}

RemoteChatModel::RemoteChatModel(std::string endpoint_url, std::string model_name, std::string api_key,
                                 int max_concurrency, RetryPolicy retry,
                                 std::unique_ptr<HttpTransport> transport)
    : endpoint_url_(std::move(endpoint_url)),
      model_name_(std::move(model_name)),
      api_key_(std::move(api_key)),
      retry_(retry),
      transport_(std::move(transport)),
      slots_(max_concurrency),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (max_concurrency < 1) throw ConfigError("max_concurrency must be positive");
  if (retry_.max_attempts < 1) throw ConfigError("max_attempts must be positive");
}

std::string RemoteChatModel::do_complete(std::span<const Message> messages) {
  const std::string body = chat_request_body(model_name_, 0.0, messages);
  auto backoff = retry_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    HttpResponse res;
    {
      slots_.acquire();
      try {
        res = transport_->post_json(endpoint_url_, body, api_key_);
      } catch (...) {
        slots_.release();
        throw;
      }
      slots_.release();
    }
    if (res.status >= 200 && res.status < 300) {
      try {
        return extract_chat_content(res.body);
      } catch (const ParseError& e) {
        throw TransportError(std::string("malformed chat response: ") + e.what());
      }
    }
    last_error = res.status == 0 ? "transport failure: " + res.error
                                 : "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200);
    if (!retryable(res)) break;
    if (attempt < retry_.max_attempts) {
      sleep_(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("chat completion failed: " + last_error);
}

}  // namespace selfexp
