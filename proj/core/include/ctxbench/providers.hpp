#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ctxbench {

inline constexpr std::string_view kMaskToken = "[MASK]";

struct FillMaskQuery {
  std::string masked_text;
  std::size_t top_k = 10;
};

struct FillMaskCandidate {
  std::string text;
  double score = 0.0;

  bool operator==(const FillMaskCandidate&) const = default;
};

using FillMaskResult = std::vector<FillMaskCandidate>;

struct ScoreQuery {
  std::string prompt;
  // Continuation text (free-form) or the option list (multiple choice).
  std::variant<std::string, std::vector<std::string>> target;

  static ScoreQuery continuation(std::string prompt, std::string text);
  static ScoreQuery options(std::string prompt, std::vector<std::string> opts);

  bool is_options() const { return target.index() == 1; }
  const std::string& continuation_text() const;
  const std::vector<std::string>& option_texts() const;
};

struct ScoreResult {
  std::variant<double, std::vector<double>> value;

  static ScoreResult from_perplexity(double p) { return {p}; }
  static ScoreResult from_probs(std::vector<double> probs) { return {std::move(probs)}; }

  bool is_options() const { return value.index() == 1; }
  // Both accessors throw ModeMismatch when the result is of the other kind.
  double perplexity() const;
  const std::vector<double>& option_probs() const;
};

struct GenerateQuery {
  std::string prompt;
  std::size_t max_answer_tokens = 32;
};

struct GenerateResult {
  std::string answer_text;

  bool operator==(const GenerateResult&) const = default;
};

// Query preconditions. BadMask for a sentinel count other than one,
// InvalidArgument for the remaining shape violations.
void validate(const FillMaskQuery& q);
void validate(const ScoreQuery& q);
void validate(const GenerateQuery& q);

/// Brings raw provider output into contract shape: drops empty candidates
/// and the mask sentinel itself, orders by descending score (stable), and
/// truncates to top_k.
FillMaskResult conform_candidates(FillMaskResult raw, std::size_t top_k);

// Throws ModeMismatch if the result kind differs from the query kind and
// ProtocolError if the numbers violate the contract (probabilities must sum
// to 1 within 1e-6, perplexity must be >= 1).
void check_score_result(const ScoreQuery& q, const ScoreResult& r);

inline constexpr double kProbabilityTolerance = 1e-6;

class FillMaskProvider {
 public:
  virtual ~FillMaskProvider() = default;
  virtual FillMaskResult fill_mask(const FillMaskQuery& q) = 0;
  // Results are in query order. The default runs queries one by one.
  virtual std::vector<FillMaskResult> fill_mask_batch(std::span<const FillMaskQuery> qs);
};

class ScoringProvider {
 public:
  virtual ~ScoringProvider() = default;
  virtual ScoreResult score(const ScoreQuery& q) = 0;
  virtual std::vector<ScoreResult> score_batch(std::span<const ScoreQuery> qs);
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  virtual GenerateResult generate(const GenerateQuery& q) = 0;
  virtual std::vector<GenerateResult> generate_batch(std::span<const GenerateQuery> qs);
};

}  // namespace ctxbench
