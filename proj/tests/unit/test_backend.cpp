#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "hardneg/editgen/backend.hpp"

using namespace hardneg;

namespace {

/// Chat-completion stub: fails the first `failures` requests with `status`.
class StubServer {
 public:
  StubServer(int failures, int status) : failures_(failures), status_(status) {
    srv_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      auth_ = req.get_header_value("Authorization");
      body_ = req.body;
      if (hits_++ < failures_) {
        res.status = status_;
        return;
      }
      const json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "New Response: ok"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~StubServer() {
    srv_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int hits() const { return hits_; }
  std::string auth() const { return auth_; }
  std::string body() const { return body_; }

 private:
  httplib::Server srv_;
  std::thread thread_;
  int port_ = 0;
  int failures_;
  int status_;
  std::atomic<int> hits_{0};
  std::string auth_;
  std::string body_;
};

BackendConfig http_config(const std::string& endpoint) {
  BackendConfig c;
  c.backend = "http";
  c.endpoint = endpoint;
  c.model = "editor";
  c.timeout_s = 5;
  c.backoff_base_s = 0.01;
  return c;
}

}  // namespace

TEST_SUITE("backend") {
  TEST_CASE("transient failures are retried with backoff") {
    StubServer stub(2, 503);
    ::setenv("VAPR_API_KEY", "sk-test", 1);
    HttpBackend be(http_config(stub.endpoint()));
    ::unsetenv("VAPR_API_KEY");
    EditRequest req;
    req.prompt = "edit this";
    CHECK(be.complete(req) == "New Response: ok");
    CHECK(be.last_attempts() == 3);
    CHECK(stub.hits() == 3);
    CHECK(stub.auth() == "Bearer sk-test");
    const auto sent = json::parse(stub.body());
    CHECK(sent["model"] == "editor");
    CHECK(sent["messages"][0]["content"] == "edit this");
  }

  TEST_CASE("retries run out") {
    StubServer stub(100, 429);
    HttpBackend be(http_config(stub.endpoint()));
    try {
      be.complete({});
      FAIL("expected Backend error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::Backend);
    }
    CHECK(be.last_attempts() == 4);
  }

  TEST_CASE("client errors are not retried") {
    StubServer stub(100, 400);
    HttpBackend be(http_config(stub.endpoint()));
    CHECK_THROWS_AS(be.complete({}), Error);
    CHECK(stub.hits() == 1);
  }

  TEST_CASE("unreachable endpoint is a backend error") {
    auto cfg = http_config("http://127.0.0.1:1/v1/chat/completions");
    cfg.max_transport_retries = 1;
    HttpBackend be(cfg);
    CHECK_THROWS_AS(be.complete({}), Error);
    CHECK(be.last_attempts() == 2);
  }

  TEST_CASE("config rejects credentials and unknown keys") {
    CHECK_THROWS_AS(BackendConfig::from_json(json{{"backend", "http"}, {"endpoint", "http://x"}, {"api_key", "s"}}), Error);
    CHECK_THROWS_AS(BackendConfig::from_json(json{{"backend", "mock"}, {"colour", 1}}), Error);
    CHECK_THROWS_AS(BackendConfig::from_json(json{{"backend", "http"}}), Error);
    CHECK(BackendConfig::from_json(json{{"backend", "mock"}}).backend == "mock");
  }

  TEST_CASE("scripted backend replays in order, then errors") {
    ScriptedBackend be({{"a", {"one", "two"}}});
    EditRequest r;
    r.sample_id = "a";
    CHECK(be.complete(r) == "one");
    CHECK(be.complete(r) == "two");
    CHECK_THROWS_AS(be.complete(r), Error);
    CHECK(be.calls("a") == 3);
  }
}
