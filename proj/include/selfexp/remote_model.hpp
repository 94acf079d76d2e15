#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>

#include "selfexp/model_client.hpp"

namespace selfexp {

struct HttpResponse {
  int status = 0;  // 0 = transport failure (no HTTP status)
  std::string body;
  std::string error;
};

// One HTTP POST. Implementations must be thread-safe.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                 const std::string& bearer_token) = 0;
};

// cpp-httplib backed transport (http and https).
std::unique_ptr<HttpTransport> make_http_transport(int timeout_seconds);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

// JSON request body: {"model", "temperature", "messages": [{"role", "content"}...]}.
std::string chat_request_body(std::string_view model_name, double temperature,
                              std::span<const Message> messages);
// Assistant text of choices[0].message.content; ParseError otherwise.
std::string extract_chat_content(std::string_view response_body);

// Chat-completions client. Retries transport failures, 429 and 5xx with
// exponential backoff; other HTTP errors fail immediately. At most
// max_concurrency requests are in flight at once.
class RemoteChatModel : public ChatModel {
 public:
  RemoteChatModel(std::string endpoint_url, std::string model_name, std::string api_key,
                  int max_concurrency, RetryPolicy retry, std::unique_ptr<HttpTransport> transport);

  std::string_view model_name() const override { return model_name_; }

  // Replaces std::this_thread::sleep_for, for tests.
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleep_ = std::move(sleeper); }

 protected:
  std::string do_complete(std::span<const Message> messages) override;

 private:
  std::string endpoint_url_;
  std::string model_name_;
  std::string api_key_;
  RetryPolicy retry_;
  std::unique_ptr<HttpTransport> transport_;
  std::counting_semaphore<> slots_;
  std::function<void(std::chrono::milliseconds)> sleep_;
};

}  // namespace selfexp
