#pragma once

// JSON encoding of the provider protocol:
//   POST /fill_mask {"masked_text","top_k"} -> {"candidates":[{"text","score"}]}
//   POST /score     {"prompt","continuation"} -> {"perplexity"}
//                   {"prompt","options":[...]} -> {"option_probs":[...]}
//   POST /generate  {"prompt","max_answer_tokens"} -> {"answer_text"}
// Batch variants live at `<endpoint>/batch`: the body is a JSON array of
// requests and the response is an array of responses in the same order.

#include <nlohmann/json.hpp>

#include "ctxbench/providers.hpp"

namespace ctxbench::wire {

inline constexpr const char* kFillMaskPath = "/fill_mask";
inline constexpr const char* kScorePath = "/score";
inline constexpr const char* kGeneratePath = "/generate";
inline constexpr const char* kHealthPath = "/healthz";
inline constexpr const char* kBatchSuffix = "/batch";
inline constexpr const char* kRequestIdHeader = "X-Request-Id";

nlohmann::json encode(const FillMaskQuery& q);
nlohmann::json encode(const FillMaskResult& r);
nlohmann::json encode(const ScoreQuery& q);
nlohmann::json encode(const ScoreResult& r);
nlohmann::json encode(const GenerateQuery& q);
nlohmann::json encode(const GenerateResult& r);

// Decoders throw ProtocolError on schema violations.
FillMaskQuery decode_fill_mask_query(const nlohmann::json& j);
FillMaskResult decode_fill_mask_result(const nlohmann::json& j);
ScoreQuery decode_score_query(const nlohmann::json& j);
ScoreResult decode_score_result(const nlohmann::json& j);
GenerateQuery decode_generate_query(const nlohmann::json& j);
GenerateResult decode_generate_result(const nlohmann::json& j);

// {"error":{"code":"BadMask","message":"..."}}
nlohmann::json error_body(std::string_view code, std::string_view message);

}  // namespace ctxbench::wire
