#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "ctxbench/providers.hpp"

namespace ctxbench {

inline constexpr const char* kProviderUrlEnv = "CTXBENCH_PROVIDER_URL";
inline constexpr const char* kProviderTokenEnv = "CTXBENCH_PROVIDER_TOKEN";

struct HttpProviderConfig {
  std::string base_url;
  std::optional<std::string> bearer_token;
  std::chrono::milliseconds timeout{30'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::size_t max_parallel = 4;
  // Send batches to `<endpoint>/batch` instead of fanning out single requests.
  bool use_batch_endpoints = false;

  // Base URL from CTXBENCH_PROVIDER_URL and token from CTXBENCH_PROVIDER_TOKEN
  // when present; everything else keeps its default.
  static HttpProviderConfig from_env();
};

/// Client for the JSON-over-HTTP provider protocol. Transport failures,
/// 5xx and 429 responses are retried with exponential backoff
/// (backoff_base * 2^attempt); once retries are exhausted the call throws
/// ProviderUnavailable. Malformed responses and other 4xx statuses throw
/// ProtocolError (BadMask/ModeMismatch when the server reports those codes).
///
/// Safe to share between threads: each request uses its own connection.
class HttpProvider final : public FillMaskProvider,
                           public ScoringProvider,
                           public GenerationProvider {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpProvider(HttpProviderConfig config);
  HttpProvider(HttpProviderConfig config, Sleeper sleeper);
  ~HttpProvider() override;

  HttpProvider(const HttpProvider&) = delete;
  HttpProvider& operator=(const HttpProvider&) = delete;

  FillMaskResult fill_mask(const FillMaskQuery& q) override;
  std::vector<FillMaskResult> fill_mask_batch(std::span<const FillMaskQuery> qs) override;

  ScoreResult score(const ScoreQuery& q) override;
  std::vector<ScoreResult> score_batch(std::span<const ScoreQuery> qs) override;

  GenerateResult generate(const GenerateQuery& q) override;
  std::vector<GenerateResult> generate_batch(std::span<const GenerateQuery> qs) override;

  // True when GET /healthz answers 200.
  bool healthy();

  const HttpProviderConfig& config() const { return config_; }

 private:
  class Transport;

  HttpProviderConfig config_;
  Sleeper sleeper_;
  std::unique_ptr<Transport> transport_;
};

}  // namespace ctxbench
