#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "ctxbench/error.hpp"
#include "ctxbench/http_provider.hpp"
#include "ctxbench/mock_providers.hpp"
#include "ctxbench/provider_server.hpp"
#include "ctxbench/wire.hpp"
#include "support.hpp"

using namespace ctxbench;
using nlohmann::json;

namespace {

// The same queries must give the same answers whether a provider is called
// in-process or through the HTTP wire.
struct ContractCase {
  std::vector<FillMaskQuery> fills;
  std::vector<ScoreQuery> scores;
  std::vector<GenerateQuery> generations;
};

ContractCase contract_case(const PromptTemplate& t, const Dataset& d) {
  ContractCase c;
  for (const auto& r : d.records) {
    c.fills.push_back({"In [MASK] stands landmark " + r.id, 10});
    c.scores.push_back(ScoreQuery::continuation(t.render(r.question, r.context), r.canonical_answer()));
    c.scores.push_back(ScoreQuery::options(t.render(r.question, r.context), {"Paris", "Lima", "Oslo", "Cairo"}));
    c.generations.push_back({t.render(r.question, r.context), 32});
    c.generations.push_back({t.render_closed_book(r.question), 32});
  }
  return c;
}

void check_same(FillMaskProvider& a_fill, ScoringProvider& a_score, GenerationProvider& a_gen,
                FillMaskProvider& b_fill, ScoringProvider& b_score, GenerationProvider& b_gen,
                const ContractCase& c) {
  const auto fa = a_fill.fill_mask_batch(c.fills);
  const auto fb = b_fill.fill_mask_batch(c.fills);
  CHECK(fa == fb);
  const auto sa = a_score.score_batch(c.scores);
  const auto sb = b_score.score_batch(c.scores);
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(sa[i].value == sb[i].value);
    CHECK_NOTHROW(check_score_result(c.scores[i], sb[i]));
  }
  CHECK(a_gen.generate_batch(c.generations) == b_gen.generate_batch(c.generations));
  CHECK(a_fill.fill_mask(c.fills.front()) == b_fill.fill_mask(c.fills.front()));
  CHECK(a_gen.generate(c.generations.front()) == b_gen.generate(c.generations.front()));
}

HttpProviderConfig config_for(const std::string& url) {
  HttpProviderConfig cfg;
  cfg.base_url = url;
  cfg.timeout = std::chrono::milliseconds(5000);
  cfg.max_retries = 3;
  cfg.backoff_base = std::chrono::milliseconds(100);
  cfg.max_parallel = 4;
  return cfg;
}

// A raw server with a scripted handler, for failure-path tests.
class ScriptedServer {
 public:
  explicit ScriptedServer(httplib::Server::Handler handler) {
    server_.Post(".*", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScriptedServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

struct RecordingSleeper {
  std::vector<std::chrono::milliseconds> delays;
  std::mutex mu;
  HttpProvider::Sleeper fn() {
    return [this](std::chrono::milliseconds d) {
      std::lock_guard<std::mutex> lock(mu);
      delays.push_back(d);
    };
  }
};

}  // namespace

TEST_CASE("HTTP provider and in-process mocks agree on every endpoint") {
  const PromptTemplate t;
  const Dataset d = testing::synthetic_dataset(6);
  mock::GeneratedFillMask fill(5);
  mock::NoisyScorer noisy(5);
  mock::ContextEchoModel echo(t, mock::echo_lexicon(d));

  ProviderServer server(&fill, &noisy, &echo);
  server.start();
  const auto c = contract_case(t, d);

  SUBCASE("single-item endpoints") {
    HttpProvider http(config_for(server.base_url()));
    CHECK(http.healthy());
    check_same(fill, noisy, echo, http, http, http, c);
  }
  SUBCASE("batch endpoints") {
    auto cfg = config_for(server.base_url());
    cfg.use_batch_endpoints = true;
    HttpProvider http(cfg);
    check_same(fill, noisy, echo, http, http, http, c);
  }
  SUBCASE("echo model as option scorer over the wire") {
    ProviderServer echo_server(nullptr, &echo, nullptr);
    echo_server.start();
    HttpProvider http(config_for(echo_server.base_url()));
    const auto q = ScoreQuery::options(t.render("q", "see Lima first"), {"Oslo", "Lima", "a", "b"});
    CHECK(http.score(q).option_probs() == echo.score(q).option_probs());
  }
}

TEST_CASE("wire JSON shapes") {
  std::mutex mu;
  std::vector<std::pair<std::string, json>> seen;
  ScriptedServer server([&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(mu);
      seen.emplace_back(req.path, json::parse(req.body));
    }
    res.set_header(wire::kRequestIdHeader, req.get_header_value(wire::kRequestIdHeader));
    if (req.path == "/v1/fill_mask") res.set_content(R"({"candidates":[{"text":"Lyon","score":0.9}]})", "application/json");
    if (req.path == "/v1/score") res.set_content(R"({"perplexity":2.5})", "application/json");
    if (req.path == "/v1/generate") res.set_content(R"({"answer_text":"Paris"})", "application/json");
  });
  HttpProvider http(config_for(server.url() + "/v1/"));
  CHECK(http.fill_mask({"a [MASK] b", 3}) == FillMaskResult{{"Lyon", 0.9}});
  CHECK(http.score(ScoreQuery::continuation("p", "x")).perplexity() == 2.5);
  CHECK(http.generate({"p", 16}).answer_text == "Paris");
  REQUIRE(seen.size() == 3u);
  CHECK(seen[0] == std::pair<std::string, json>{"/v1/fill_mask", json::parse(R"({"masked_text":"a [MASK] b","top_k":3})")});
  CHECK(seen[1] == std::pair<std::string, json>{"/v1/score", json::parse(R"({"prompt":"p","continuation":"x"})")});
  CHECK(seen[2] == std::pair<std::string, json>{"/v1/generate", json::parse(R"({"prompt":"p","max_answer_tokens":16})")});
}

TEST_CASE("transient failures are retried with exponential backoff") {
  std::atomic<int> calls{0};
  ScriptedServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = calls == 1 ? 503 : 429;
      return;
    }
    res.set_content(R"({"answer_text":"ok"})", "application/json");
  });
  RecordingSleeper sleeper;
  HttpProvider http(config_for(server.url()), sleeper.fn());
  CHECK(http.generate({"p", 8}).answer_text == "ok");
  CHECK(calls == 3);
  CHECK(sleeper.delays == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100),
                                                                 std::chrono::milliseconds(200)});
}

TEST_CASE("exhausted retries raise ProviderUnavailable") {
  std::atomic<int> calls{0};
  ScriptedServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  RecordingSleeper sleeper;
  HttpProvider http(config_for(server.url()), sleeper.fn());
  CHECK(testing::error_code([&] { http.generate({"p", 8}); }) == ErrorCode::ProviderUnavailable);
  CHECK(calls == 4);
  CHECK(sleeper.delays.size() == 3u);
  CHECK(sleeper.delays.back() == std::chrono::milliseconds(400));

  // Nothing listening at all.
  auto cfg = config_for("http://127.0.0.1:1");
  cfg.max_retries = 1;
  HttpProvider dead(cfg, sleeper.fn());
  CHECK(testing::error_code([&] { dead.score(ScoreQuery::continuation("p", "x")); }) == ErrorCode::ProviderUnavailable);
  CHECK_FALSE(dead.healthy());
}

TEST_CASE("client errors are not retried and keep their codes") {
  std::atomic<int> calls{0};
  ScriptedServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    res.status = 400;
    const std::string code = req.path == "/fill_mask" ? "BadMask" : "ModeMismatch";
    res.set_content(wire::error_body(code, "rejected").dump(), "application/json");
  });
  RecordingSleeper sleeper;
  HttpProvider http(config_for(server.url()), sleeper.fn());
  CHECK(testing::error_code([&] { http.fill_mask({"[MASK]", 2}); }) == ErrorCode::BadMask);
  CHECK(testing::error_code([&] { http.score(ScoreQuery::continuation("p", "x")); }) == ErrorCode::ModeMismatch);
  CHECK(calls == 2);
  CHECK(sleeper.delays.empty());

  // Malformed masks never leave the process.
  CHECK(testing::error_code([&] { http.fill_mask({"no sentinel", 2}); }) == ErrorCode::BadMask);
  CHECK(calls == 2);
}

TEST_CASE("protocol violations surface as ProtocolError or ModeMismatch") {
  std::string body;
  std::string echo_id = "";
  ScriptedServer server([&](const httplib::Request& req, httplib::Response& res) {
    res.set_header(wire::kRequestIdHeader, echo_id.empty() ? req.get_header_value(wire::kRequestIdHeader) : echo_id);
    res.set_content(body, "application/json");
  });
  HttpProvider http(config_for(server.url()));
  const auto opts = ScoreQuery::options("p", {"a", "b"});

  body = R"({"option_probs":[0.7,0.7]})";
  CHECK(testing::error_code([&] { http.score(opts); }) == ErrorCode::ProtocolError);
  body = R"({"option_probs":[1.0]})";
  CHECK(testing::error_code([&] { http.score(opts); }) == ErrorCode::ProtocolError);
  body = R"({"perplexity":3.0})";
  CHECK(testing::error_code([&] { http.score(opts); }) == ErrorCode::ModeMismatch);
  body = "not json";
  CHECK(testing::error_code([&] { http.generate({"p", 4}); }) == ErrorCode::ProtocolError);
  body = R"({"answer":"x"})";
  CHECK(testing::error_code([&] { http.generate({"p", 4}); }) == ErrorCode::ProtocolError);
  body = R"({"answer_text":"x"})";
  echo_id = "someone-else";
  CHECK(testing::error_code([&] { http.generate({"p", 4}); }) == ErrorCode::ProtocolError);
}

TEST_CASE("bearer token and correlation id headers") {
  std::string auth;
  std::string request_id;
  ScriptedServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    request_id = req.get_header_value(wire::kRequestIdHeader);
    res.set_content(R"({"answer_text":"x"})", "application/json");
  });
  auto cfg = config_for(server.url());
  cfg.bearer_token = "secret";
  HttpProvider http(cfg);
  http.generate({"p", 4});
  CHECK(auth == "Bearer secret");
  CHECK_FALSE(request_id.empty());
}

TEST_CASE("server maps missing capabilities and bad requests") {
  mock::GeneratedFillMask fill(1);
  ProviderServer server(&fill, nullptr, nullptr);
  server.start();
  httplib::Client client(server.base_url());

  auto res = client.Post("/score", R"({"prompt":"p","continuation":"x"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 501);
  res = client.Post("/fill_mask", R"({"masked_text":"no sentinel","top_k":3})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(json::parse(res->body)["error"]["code"] == "BadMask");
  res = client.Post("/fill_mask", "{broken", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = client.Post("/fill_mask/batch", R"([{"masked_text":"a [MASK]","top_k":2},{"masked_text":"b [MASK]","top_k":1}])",
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto batch = json::parse(res->body);
  REQUIRE(batch.size() == 2u);
  CHECK(batch[0]["candidates"].size() == 2u);
  CHECK(batch[1]["candidates"].size() == 1u);

  HttpProvider http(config_for(server.base_url()));
  CHECK(testing::error_code([&] { http.generate({"p", 4}); }) == ErrorCode::ProtocolError);
}

TEST_CASE("provider configuration from the environment") {
  ::setenv(kProviderUrlEnv, "http://example.invalid:9", 1);
  ::setenv(kProviderTokenEnv, "tok", 1);
  const auto cfg = HttpProviderConfig::from_env();
  CHECK(cfg.base_url == "http://example.invalid:9");
  CHECK(cfg.bearer_token == std::optional<std::string>("tok"));
  ::unsetenv(kProviderUrlEnv);
  ::unsetenv(kProviderTokenEnv);
  CHECK(testing::error_code([] { HttpProvider bad(config_for("ftp://nope")); }) == ErrorCode::ConfigError);
}
