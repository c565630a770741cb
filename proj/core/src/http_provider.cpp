#include "ctxbench/http_provider.hpp"

#include <atomic>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>

#include "ctxbench/error.hpp"
#include "ctxbench/parallel.hpp"
#include "ctxbench/wire.hpp"

namespace ctxbench {

using nlohmann::json;

HttpProviderConfig HttpProviderConfig::from_env() {
  HttpProviderConfig cfg;
  if (const char* url = std::getenv(kProviderUrlEnv)) cfg.base_url = url;
  if (const char* token = std::getenv(kProviderTokenEnv); token && *token) cfg.bearer_token = token;
  return cfg;
}

class HttpProvider::Transport {
 public:
  Transport(const HttpProviderConfig& cfg, Sleeper& sleeper) : cfg_(cfg), sleeper_(sleeper) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg.base_url, m, kUrl)) {
      throw Error(ErrorCode::ConfigError, "provider base URL must look like http(s)://host[:port][/prefix]: '" +
                                              cfg.base_url + "'");
    }
    origin_ = m[1].str();
    prefix_ = m[2].matched ? m[2].str() : "";
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  json post(const std::string& path, const json& body) {
    const std::string payload = body.dump();
    const std::string request_id = "req-" + std::to_string(next_id_++);
    std::string last_failure;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) sleeper_(cfg_.backoff_base * (1LL << (attempt - 1)));
      httplib::Client client(origin_);
      configure(client);
      httplib::Headers headers{{wire::kRequestIdHeader, request_id}};
      if (cfg_.bearer_token) headers.emplace("Authorization", "Bearer " + *cfg_.bearer_token);
      auto res = client.Post(prefix_ + path, headers, payload, "application/json");
      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) {
        if (res->has_header(wire::kRequestIdHeader) &&
            res->get_header_value(wire::kRequestIdHeader) != request_id) {
          throw Error(ErrorCode::ProtocolError, path + ": response correlation id mismatch");
        }
        try {
          return json::parse(res->body);
        } catch (const json::parse_error& e) {
          throw Error(ErrorCode::ProtocolError, path + ": undecodable response body: " + e.what());
        }
      }
      if (res->status == 429 || (res->status >= 500 && res->status != 501)) {
        last_failure = "HTTP " + std::to_string(res->status);
        continue;
      }
      throw_client_error(path, res->status, res->body);
    }
    throw Error(ErrorCode::ProviderUnavailable, origin_ + prefix_ + path + " after " +
                                                    std::to_string(cfg_.max_retries + 1) +
                                                    " attempts: " + last_failure);
  }

  bool healthy() {
    httplib::Client client(origin_);
    configure(client);
    auto res = client.Get(prefix_ + wire::kHealthPath);
    return res && res->status == 200;
  }

 private:
  void configure(httplib::Client& client) const {
    const auto secs = cfg_.timeout.count() / 1000;
    const auto usecs = (cfg_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
  }

  [[noreturn]] static void throw_client_error(const std::string& path, int status, const std::string& body) {
    std::string code;
    std::string message = body;
    try {
      auto j = json::parse(body);
      code = j.at("error").at("code").get<std::string>();
      message = j.at("error").at("message").get<std::string>();
    } catch (const json::exception&) {
    }
    const std::string detail = path + ": HTTP " + std::to_string(status) + ": " + message;
    if (code == "BadMask") throw Error(ErrorCode::BadMask, detail);
    if (code == "ModeMismatch") throw Error(ErrorCode::ModeMismatch, detail);
    throw Error(ErrorCode::ProtocolError, detail);
  }

  const HttpProviderConfig& cfg_;
  Sleeper& sleeper_;
  std::string origin_;
  std::string prefix_;
  std::atomic<std::uint64_t> next_id_{1};
};

HttpProvider::HttpProvider(HttpProviderConfig config)
    : HttpProvider(std::move(config), [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

HttpProvider::HttpProvider(HttpProviderConfig config, Sleeper sleeper)
    : config_(std::move(config)),
      sleeper_(std::move(sleeper)),
      transport_(std::make_unique<Transport>(config_, sleeper_)) {}

HttpProvider::~HttpProvider() = default;

bool HttpProvider::healthy() { return transport_->healthy(); }

FillMaskResult HttpProvider::fill_mask(const FillMaskQuery& q) {
  validate(q);
  auto j = transport_->post(wire::kFillMaskPath, wire::encode(q));
  return conform_candidates(wire::decode_fill_mask_result(j), q.top_k);
}

ScoreResult HttpProvider::score(const ScoreQuery& q) {
  validate(q);
  auto r = wire::decode_score_result(transport_->post(wire::kScorePath, wire::encode(q)));
  check_score_result(q, r);
  return r;
}

GenerateResult HttpProvider::generate(const GenerateQuery& q) {
  validate(q);
  return wire::decode_generate_result(transport_->post(wire::kGeneratePath, wire::encode(q)));
}

std::vector<FillMaskResult> HttpProvider::fill_mask_batch(std::span<const FillMaskQuery> qs) {
  std::vector<FillMaskResult> out(qs.size());
  if (config_.use_batch_endpoints && !qs.empty()) {
    json body = json::array();
    for (const auto& q : qs) {
      validate(q);
      body.push_back(wire::encode(q));
    }
    auto j = transport_->post(std::string(wire::kFillMaskPath) + wire::kBatchSuffix, body);
    if (!j.is_array() || j.size() != qs.size()) throw Error(ErrorCode::ProtocolError, "batch size mismatch");
    for (std::size_t i = 0; i < qs.size(); ++i) {
      out[i] = conform_candidates(wire::decode_fill_mask_result(j[i]), qs[i].top_k);
    }
    return out;
  }
  parallel_for(qs.size(), config_.max_parallel, [&](std::size_t i) { out[i] = fill_mask(qs[i]); });
  return out;
}

std::vector<ScoreResult> HttpProvider::score_batch(std::span<const ScoreQuery> qs) {
  std::vector<ScoreResult> out(qs.size());
  if (config_.use_batch_endpoints && !qs.empty()) {
    json body = json::array();
    for (const auto& q : qs) {
      validate(q);
      body.push_back(wire::encode(q));
    }
    auto j = transport_->post(std::string(wire::kScorePath) + wire::kBatchSuffix, body);
    if (!j.is_array() || j.size() != qs.size()) throw Error(ErrorCode::ProtocolError, "batch size mismatch");
    for (std::size_t i = 0; i < qs.size(); ++i) {
      out[i] = wire::decode_score_result(j[i]);
      check_score_result(qs[i], out[i]);
    }
    return out;
  }
  parallel_for(qs.size(), config_.max_parallel, [&](std::size_t i) { out[i] = score(qs[i]); });
  return out;
}

std::vector<GenerateResult> HttpProvider::generate_batch(std::span<const GenerateQuery> qs) {
  std::vector<GenerateResult> out(qs.size());
  if (config_.use_batch_endpoints && !qs.empty()) {
    json body = json::array();
    for (const auto& q : qs) {
      validate(q);
      body.push_back(wire::encode(q));
    }
    auto j = transport_->post(std::string(wire::kGeneratePath) + wire::kBatchSuffix, body);
    if (!j.is_array() || j.size() != qs.size()) throw Error(ErrorCode::ProtocolError, "batch size mismatch");
    for (std::size_t i = 0; i < qs.size(); ++i) out[i] = wire::decode_generate_result(j[i]);
    return out;
  }
  parallel_for(qs.size(), config_.max_parallel, [&](std::size_t i) { out[i] = generate(qs[i]); });
  return out;
}

}  // namespace ctxbench
