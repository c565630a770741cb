#include "ctxbench/wire.hpp"

#include "ctxbench/error.hpp"

namespace ctxbench::wire {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ProtocolError, what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object()) bad("expected a JSON object");
  auto it = j.find(name);
  if (it == j.end()) bad(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) bad(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::size_t positive_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
    bad(std::string("field '") + name + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

double number(const json& v, const char* what) {
  if (!v.is_number()) bad(std::string(what) + " must be a number");
  return v.get<double>();
}

}  // namespace

json encode(const FillMaskQuery& q) { return {{"masked_text", q.masked_text}, {"top_k", q.top_k}}; }

json encode(const FillMaskResult& r) {
  json candidates = json::array();
  for (const auto& c : r) candidates.push_back({{"text", c.text}, {"score", c.score}});
  return {{"candidates", std::move(candidates)}};
}

json encode(const ScoreQuery& q) {
  if (q.is_options()) return {{"prompt", q.prompt}, {"options", q.option_texts()}};
  return {{"prompt", q.prompt}, {"continuation", q.continuation_text()}};
}

json encode(const ScoreResult& r) {
  if (r.is_options()) return {{"option_probs", r.option_probs()}};
  return {{"perplexity", r.perplexity()}};
}

json encode(const GenerateQuery& q) {
  return {{"prompt", q.prompt}, {"max_answer_tokens", q.max_answer_tokens}};
}

json encode(const GenerateResult& r) { return {{"answer_text", r.answer_text}}; }

FillMaskQuery decode_fill_mask_query(const json& j) {
  return FillMaskQuery{string_field(j, "masked_text"), positive_field(j, "top_k")};
}

FillMaskResult decode_fill_mask_result(const json& j) {
  const json& cands = field(j, "candidates");
  if (!cands.is_array()) bad("'candidates' must be an array");
  FillMaskResult out;
  for (const auto& c : cands) {
    out.push_back({string_field(c, "text"), number(field(c, "score"), "candidate score")});
  }
  return out;
}

ScoreQuery decode_score_query(const json& j) {
  std::string prompt = string_field(j, "prompt");
  const bool has_options = j.contains("options");
  const bool has_continuation = j.contains("continuation");
  if (has_options == has_continuation) bad("score query needs exactly one of 'continuation' or 'options'");
  if (has_continuation) return ScoreQuery::continuation(std::move(prompt), string_field(j, "continuation"));
  const json& opts = j["options"];
  if (!opts.is_array()) bad("'options' must be an array");
  std::vector<std::string> options;
  for (const auto& o : opts) {
    if (!o.is_string()) bad("options must be strings");
    options.push_back(o.get<std::string>());
  }
  return ScoreQuery::options(std::move(prompt), std::move(options));
}

ScoreResult decode_score_result(const json& j) {
  if (!j.is_object()) bad("expected a JSON object");
  if (j.contains("perplexity")) return ScoreResult::from_perplexity(number(j["perplexity"], "perplexity"));
  if (j.contains("option_probs")) {
    const json& probs = j["option_probs"];
    if (!probs.is_array()) bad("'option_probs' must be an array");
    std::vector<double> out;
    for (const auto& p : probs) out.push_back(number(p, "option probability"));
    return ScoreResult::from_probs(std::move(out));
  }
  bad("score result needs 'perplexity' or 'option_probs'");
}

GenerateQuery decode_generate_query(const json& j) {
  return GenerateQuery{string_field(j, "prompt"), positive_field(j, "max_answer_tokens")};
}

GenerateResult decode_generate_result(const json& j) { return GenerateResult{string_field(j, "answer_text")}; }

json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace ctxbench::wire
