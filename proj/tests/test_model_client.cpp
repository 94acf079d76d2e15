#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"
#include "selfexp/errors.hpp"
#include "selfexp/lexicon_oracle.hpp"
#include "selfexp/model_client.hpp"
#include "selfexp/prompts.hpp"
#include "selfexp/remote_model.hpp"
#include "selfexp/response_cache.hpp"
#include "support.hpp"

using namespace selfexp;
using namespace selfexp::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("selfexp_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<Message> conversation(const std::string& review) {
  return prompts::render(PromptVariant::kPredictOnly, std::string_view(review));
}

}  // namespace

TEST(Conversation, FlattenMatchesRolePrefixedContext) {
  const std::vector<Message> msgs = {{Role::kSystem, "You are a math teacher."},
                                     {Role::kUser, "What is one solution to x^2=1?"},
                                     {Role::kAssistant, "x=1 is a solution."},
                                     {Role::kUser, "Are there other solutions?"}};
  EXPECT_EQ(flatten_context(msgs),
            "System: You are a math teacher. User: What is one solution to x^2=1? Assistant: x=1 is a solution. "
            "User: Are there other solutions? Assistant:");
}

TEST(Conversation, ValidatesShape) {
  EXPECT_NO_THROW(validate_conversation(conversation("a")));
  const std::vector<Message> no_system = {{Role::kUser, "hi"}};
  EXPECT_THROW(validate_conversation(no_system), InvalidArgument);
  const std::vector<Message> ends_assistant = {{Role::kSystem, "s"}, {Role::kUser, "u"}, {Role::kAssistant, "a"}};
  EXPECT_THROW(validate_conversation(ends_assistant), InvalidArgument);
}

TEST(CacheKey, DeterministicAndSensitive) {
  const auto a = conversation("good film");
  EXPECT_EQ(cache_key("m", a), cache_key("m", a));
  EXPECT_NE(cache_key("m", a), cache_key("n", a));
  EXPECT_NE(cache_key("m", a), cache_key("m", conversation("good  film")));
  EXPECT_EQ(cache_key("m", a).size(), 64u);
  const std::vector<Message> x = {{Role::kSystem, "ab"}, {Role::kUser, "c"}};
  const std::vector<Message> y = {{Role::kSystem, "a"}, {Role::kUser, "bc"}};
  EXPECT_NE(cache_key("m", x), cache_key("m", y));
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ResponseCache, PersistsAndReloads) {
  const auto dir = temp_dir("cache");
  const auto path = dir / "cache.jsonl";
  {
    ResponseCache cache(path);
    cache.insert(CacheRecord{"k1", "m", conversation("a"), "(1, 0.9)", "2024-01-01T00:00:00Z"});
    cache.insert(CacheRecord{"k1", "m", conversation("a"), "(0, 0.9)", "2024-01-01T00:00:01Z"});
    cache.insert(CacheRecord{"k2", "m", conversation("b"), "line\nwith \"quotes\"", "2024-01-01T00:00:02Z"});
    EXPECT_EQ(cache.size(), 2u);
  }
  ResponseCache again(path, true);
  EXPECT_EQ(again.size(), 2u);
  EXPECT_EQ(again.lookup("k1"), "(1, 0.9)");
  EXPECT_EQ(again.lookup("k2"), "line\nwith \"quotes\"");
  EXPECT_FALSE(again.lookup("k3"));
}

TEST(ResponseCache, DigestIgnoresOrderAndTimestamps) {
  const auto dir = temp_dir("digest");
  ResponseCache a(dir / "a.jsonl");
  ResponseCache b(dir / "b.jsonl");
  a.insert(CacheRecord{"k1", "m", conversation("a"), "x", "t1"});
  a.insert(CacheRecord{"k2", "m", conversation("b"), "y", "t2"});
  b.insert(CacheRecord{"k2", "m", conversation("b"), "y", "t9"});
  b.insert(CacheRecord{"k1", "m", conversation("a"), "x", "t8"});
  EXPECT_EQ(a.digest(), b.digest());
  b.insert(CacheRecord{"k3", "m", conversation("c"), "z", "t7"});
  EXPECT_NE(a.digest(), b.digest());
}

TEST(ResponseCache, MalformedLineIsLoadError) {
  const auto dir = temp_dir("malformed");
  std::ofstream(dir / "bad.jsonl") << "{not json}\n";
  try {
    ResponseCache cache(dir / "bad.jsonl");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(CachedModel, SecondCallServedFromCache) {
  const auto dir = temp_dir("cached");
  auto cache = std::make_shared<ResponseCache>(dir / "c.jsonl");
  auto inner = std::make_unique<OracleChatModel>(LexiconOracle({{"great", 0.25}}));
  CachedModel model(std::move(inner), cache);
  const auto msgs = conversation("great great great");
  const auto first = model.complete(msgs);
  const auto second = model.complete(msgs);
  EXPECT_EQ(first, second);
  EXPECT_EQ(model.misses(), 1u);
  EXPECT_EQ(model.hits(), 1u);
}

TEST(OracleModel, ClosedFormPositivity) {
  OracleChatModel model(LexiconOracle({{"great", 0.125}}));
  EXPECT_EQ(model.complete(conversation("great great great")), "(1, " + format_decimal(0.5 + 3 * 0.125) + ")");
}

TEST(ReplayModel, ServesHitsAndRejectsMisses) {
  const auto dir = temp_dir("replay");
  auto cache = std::make_shared<ResponseCache>(dir / "r.jsonl");
  const auto msgs = conversation("good");
  cache->insert(CacheRecord{cache_key("m", msgs), "m", msgs, "(1, 0.75)", "t"});
  ReplayModel replay("m", cache);
  EXPECT_EQ(replay.complete(msgs), "(1, 0.75)");
  EXPECT_THROW(replay.complete(conversation("unseen")), ReplayMissError);
}

TEST(MakeModel, ConfigurationErrors) {
  ModelConfig c;
  c.temperature = 0.7;
  EXPECT_THROW(make_model(c), ConfigError);

  c = ModelConfig{};
  c.cache_path = "/nonexistent-dir-for-test/cache.jsonl";
  EXPECT_THROW(make_model(c), ConfigError);

  c = ModelConfig{};
  c.backend = Backend::kReplay;
  c.cache_path = (temp_dir("mk") / "absent.jsonl").string();
  EXPECT_THROW(make_model(c), ConfigError);

  c = ModelConfig{};
  c.backend = Backend::kRemote;
  c.cache_path = (temp_dir("mk2") / "c.jsonl").string();
  c.api_key_env = "SELFEXP_TEST_UNSET_KEY_VARIABLE";
  ::unsetenv(c.api_key_env.c_str());
  EXPECT_THROW(make_model(c), ConfigError);
}

TEST(MakeModel, DefaultNames) {
  ModelConfig c;
  EXPECT_EQ(resolved_model_name(c), "lexicon-oracle");
  c.backend = Backend::kRemote;
  EXPECT_EQ(resolved_model_name(c), "gpt-3.5-turbo");
  c.model_name = "other";
  EXPECT_EQ(resolved_model_name(c), "other");
}

TEST(RemoteModel, RequestBodyAndContentExtraction) {
  const auto msgs = conversation("a");
  const auto body = nlohmann::json::parse(chat_request_body("gpt-3.5-turbo", 0.0, msgs));
  EXPECT_EQ(body["model"], "gpt-3.5-turbo");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "<review> a <review>");
  EXPECT_EQ(extract_chat_content(R"j({"choices":[{"message":{"role":"assistant","content":"(1, 0.9)"}}]})j"),
            "(1, 0.9)");
  EXPECT_THROW(extract_chat_content(R"j({"choices":[]})j"), ParseError);
}

// Scripted transport: replies from a list, then repeats the last reply.
class ListTransport : public HttpTransport {
 public:
  explicit ListTransport(std::vector<HttpResponse> replies) : replies_(std::move(replies)) {}
  HttpResponse post_json(const std::string&, const std::string&, const std::string&) override {
    const std::size_t i = calls_++;
    return replies_[std::min(i, replies_.size() - 1)];
  }
  std::atomic<std::size_t> calls_{0};

 private:
  std::vector<HttpResponse> replies_;
};

const char* kOkBody = R"j({"choices":[{"message":{"role":"assistant","content":"(0, 0.6)"}}]})j";

TEST(RemoteModel, RetriesThenSucceedsWithBackoff) {
  auto transport = std::make_unique<ListTransport>(
      std::vector<HttpResponse>{{0, "", "connection reset"}, {503, "busy", ""}, {200, kOkBody, ""}});
  auto* t = transport.get();
  RemoteChatModel model("http://unused/v1", "m", "key", 2, RetryPolicy{3, std::chrono::milliseconds(100)},
                        std::move(transport));
  std::vector<long> sleeps;
  model.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  EXPECT_EQ(model.complete(conversation("a")), "(0, 0.6)");
  EXPECT_EQ(t->calls_.load(), 3u);
  EXPECT_EQ(sleeps, (std::vector<long>{100, 200}));
}

TEST(RemoteModel, GivesUpAfterMaxAttempts) {
  auto transport = std::make_unique<ListTransport>(std::vector<HttpResponse>{{429, "slow down", ""}});
  auto* t = transport.get();
  RemoteChatModel model("http://unused/v1", "m", "key", 1, RetryPolicy{3, std::chrono::milliseconds(1)},
                        std::move(transport));
  model.set_sleeper([](std::chrono::milliseconds) {});
  EXPECT_THROW(model.complete(conversation("a")), TransportError);
  EXPECT_EQ(t->calls_.load(), 3u);
}

TEST(RemoteModel, ClientErrorsAreNotRetried) {
  auto transport = std::make_unique<ListTransport>(std::vector<HttpResponse>{{401, "bad key", ""}});
  auto* t = transport.get();
  RemoteChatModel model("http://unused/v1", "m", "key", 1, RetryPolicy{3, std::chrono::milliseconds(1)},
                        std::move(transport));
  model.set_sleeper([](std::chrono::milliseconds) {});
  EXPECT_THROW(model.complete(conversation("a")), TransportError);
  EXPECT_EQ(t->calls_.load(), 1u);
}

TEST(RemoteModel, LocalServerRoundTripWithRateLimitAndConcurrencyBound) {
  httplib::Server server;
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  std::atomic<int> requests{0};
  std::atomic<bool> auth_ok{true};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") != "Bearer sk-test") auth_ok = false;
    const int n = ++requests;
    if (n == 1) {
      res.status = 429;
      return;
    }
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --in_flight;
    const auto body = nlohmann::json::parse(req.body);
    const std::string review = body["messages"][1]["content"];
    nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "(1, 0.75) " + review}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread serve([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteChatModel model("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", "m", "sk-test", 2,
                        RetryPolicy{3, std::chrono::milliseconds(1)}, make_http_transport(10));
  std::vector<std::thread> clients;
  std::vector<std::string> replies(8);
  for (int i = 0; i < 8; ++i) {
    clients.emplace_back([&, i] { replies[i] = model.complete(conversation("r" + std::to_string(i))); });
  }
  for (auto& c : clients) c.join();
  server.stop();
  serve.join();

  for (int i = 0; i < 8; ++i) EXPECT_EQ(replies[i], "(1, 0.75) <review> r" + std::to_string(i) + " <review>");
  EXPECT_EQ(requests.load(), 9);
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
  EXPECT_TRUE(auth_ok);
}
