#include "ctxbench/providers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxbench/error.hpp"
#include "ctxbench/text.hpp"

namespace ctxbench {

ScoreQuery ScoreQuery::continuation(std::string prompt, std::string text) {
  return ScoreQuery{std::move(prompt), std::move(text)};
}

ScoreQuery ScoreQuery::options(std::string prompt, std::vector<std::string> opts) {
  return ScoreQuery{std::move(prompt), std::move(opts)};
}

const std::string& ScoreQuery::continuation_text() const {
  if (is_options()) throw Error(ErrorCode::ModeMismatch, "score query carries options, not a continuation");
  return std::get<0>(target);
}

const std::vector<std::string>& ScoreQuery::option_texts() const {
  if (!is_options()) throw Error(ErrorCode::ModeMismatch, "score query carries a continuation, not options");
  return std::get<1>(target);
}

double ScoreResult::perplexity() const {
  if (is_options()) throw Error(ErrorCode::ModeMismatch, "expected perplexity, got option probabilities");
  return std::get<0>(value);
}

const std::vector<double>& ScoreResult::option_probs() const {
  if (!is_options()) throw Error(ErrorCode::ModeMismatch, "expected option probabilities, got perplexity");
  return std::get<1>(value);
}

void validate(const FillMaskQuery& q) {
  const auto sentinels = count_occurrences(q.masked_text, kMaskToken);
  if (sentinels != 1) {
    throw Error(ErrorCode::BadMask,
                "masked text must contain exactly one " + std::string(kMaskToken) + ", found " +
                    std::to_string(sentinels));
  }
  if (q.top_k == 0) throw Error(ErrorCode::InvalidArgument, "top_k must be positive");
}

void validate(const ScoreQuery& q) {
  if (q.is_options() && q.option_texts().empty()) {
    throw Error(ErrorCode::InvalidArgument, "score query options must be non-empty");
  }
}

void validate(const GenerateQuery& q) {
  if (q.max_answer_tokens == 0) throw Error(ErrorCode::InvalidArgument, "max_answer_tokens must be positive");
}

FillMaskResult conform_candidates(FillMaskResult raw, std::size_t top_k) {
  std::erase_if(raw, [](const FillMaskCandidate& c) {
    return c.text.empty() || c.text == kMaskToken || std::isnan(c.score);
  });
  std::stable_sort(raw.begin(), raw.end(),
                   [](const FillMaskCandidate& a, const FillMaskCandidate& b) { return a.score > b.score; });
  if (raw.size() > top_k) raw.resize(top_k);
  return raw;
}

void check_score_result(const ScoreQuery& q, const ScoreResult& r) {
  if (q.is_options() != r.is_options()) {
    throw Error(ErrorCode::ModeMismatch, q.is_options() ? "options query answered with perplexity"
                                                        : "continuation query answered with probabilities");
  }
  if (!r.is_options()) {
    const double p = r.perplexity();
    if (!(p >= 1.0) || std::isinf(p)) {
      throw Error(ErrorCode::ProtocolError, "perplexity must be a finite value >= 1");
    }
    return;
  }
  const auto& probs = r.option_probs();
  if (probs.size() != q.option_texts().size()) {
    throw Error(ErrorCode::ProtocolError, "option_probs length " + std::to_string(probs.size()) +
                                              " != option count " + std::to_string(q.option_texts().size()));
  }
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::ProtocolError, "probability outside [0,1]");
  }
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw Error(ErrorCode::ProtocolError, "option_probs sum to " + std::to_string(sum));
  }
}

std::vector<FillMaskResult> FillMaskProvider::fill_mask_batch(std::span<const FillMaskQuery> qs) {
  std::vector<FillMaskResult> out;
  out.reserve(qs.size());
  for (const auto& q : qs) out.push_back(fill_mask(q));
  return out;
}

std::vector<ScoreResult> ScoringProvider::score_batch(std::span<const ScoreQuery> qs) {
  std::vector<ScoreResult> out;
  out.reserve(qs.size());
  for (const auto& q : qs) out.push_back(score(q));
  return out;
}

std::vector<GenerateResult> GenerationProvider::generate_batch(std::span<const GenerateQuery> qs) {
  std::vector<GenerateResult> out;
  out.reserve(qs.size());
  for (const auto& q : qs) out.push_back(generate(q));
  return out;
}

}  // namespace ctxbench
