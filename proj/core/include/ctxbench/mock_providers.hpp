#pragma once

// Deterministic in-process providers. Every mock is a pure function of its
// construction arguments and the query, so repeated runs are byte-identical.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ctxbench/corpus.hpp"
#include "ctxbench/prompt.hpp"
#include "ctxbench/providers.hpp"

namespace ctxbench::mock {

inline constexpr std::string_view kUnknownAnswer = "UNKNOWN";

// Lookup table: the first entry whose key is a substring of the masked text
// supplies the candidates, scored 1/(1+rank).
class TableFillMask final : public FillMaskProvider {
 public:
  using Entry = std::pair<std::string, std::vector<std::string>>;

  explicit TableFillMask(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  FillMaskResult fill_mask(const FillMaskQuery& q) override;

 private:
  std::vector<Entry> entries_;
};

// Synthesizes `count` distinct made-up names per query, seeded by
// (seed, masked_text). The names are built from syllables that do not form
// common English words, so they never collide with fixture answers.
class GeneratedFillMask final : public FillMaskProvider {
 public:
  explicit GeneratedFillMask(std::uint64_t seed, std::size_t count = 10)
      : seed_(seed), count_(count) {}

  FillMaskResult fill_mask(const FillMaskQuery& q) override;

 private:
  std::uint64_t seed_;
  std::size_t count_;
};

// Uniform option probabilities; perplexity 1 for continuations.
class UniformScorer final : public ScoringProvider {
 public:
  ScoreResult score(const ScoreQuery& q) override;
};

// Softmax over fixed logits; options mode only.
class LogitScorer final : public ScoringProvider {
 public:
  explicit LogitScorer(std::vector<double> logits) : logits_(std::move(logits)) {}
  ScoreResult score(const ScoreQuery& q) override;

 private:
  std::vector<double> logits_;
};

// perplexity = 1 + number of whitespace tokens of the prompt that are
// planted tokens. Continuation mode only.
class PlantedTokenScorer final : public ScoringProvider {
 public:
  explicit PlantedTokenScorer(std::vector<std::string> planted) : planted_(std::move(planted)) {}
  ScoreResult score(const ScoreQuery& q) override;

 private:
  std::vector<std::string> planted_;
};

/// Rigged scorer whose objective separates over distractor positions:
/// perplexity = 1 + sum_i weights[i][word_i], where word_i are the last
/// `weights.size()` words of the prompt's context segment. Unlisted words
/// weigh 0. Continuation mode only.
class SeparableScorer final : public ScoringProvider {
 public:
  SeparableScorer(PromptTemplate tmpl, std::vector<std::map<std::string, double>> weights)
      : template_(std::move(tmpl)), weights_(std::move(weights)) {}

  ScoreResult score(const ScoreQuery& q) override;
  double objective(const std::vector<std::string>& words) const;

 private:
  PromptTemplate template_;
  std::vector<std::map<std::string, double>> weights_;
};

// Hash-noise scorer: perplexity in [1, 11) and softmax option probabilities
// from logits in [-3, 3), both derived from (seed, query).
class NoisyScorer final : public ScoringProvider {
 public:
  explicit NoisyScorer(std::uint64_t seed) : seed_(seed) {}
  ScoreResult score(const ScoreQuery& q) override;

 private:
  std::uint64_t seed_;
};

/// Context-echo oracle. For each question it knows a lexicon of answer
/// strings (the golds plus any substituted answers). Given a prompt it
/// returns the lexicon entry that occurs earliest in the context segment,
/// or "UNKNOWN" when none occurs (always the case closed-book).
/// As a scorer it puts all mass on the option occurring earliest in the
/// context, and uniform mass when no option occurs.
class ContextEchoModel final : public GenerationProvider, public ScoringProvider {
 public:
  using Lexicon = std::map<std::string, std::vector<std::string>>;

  ContextEchoModel(PromptTemplate tmpl, Lexicon lexicon)
      : template_(std::move(tmpl)), lexicon_(std::move(lexicon)) {}

  GenerateResult generate(const GenerateQuery& q) override;
  ScoreResult score(const ScoreQuery& q) override;

 private:
  PromptTemplate template_;
  Lexicon lexicon_;
};

/// Parametric-only oracle: ignores the context and always emits its fixed
/// closed-book answer for the question ("UNKNOWN" for unlisted questions).
/// As a scorer it puts probability 0.97 on its fixed option index.
class ParametricModel final : public GenerationProvider, public ScoringProvider {
 public:
  ParametricModel(PromptTemplate tmpl, std::map<std::string, std::string> answers,
                  std::map<std::string, std::size_t> option_answers = {})
      : template_(std::move(tmpl)),
        answers_(std::move(answers)),
        option_answers_(std::move(option_answers)) {}

  GenerateResult generate(const GenerateQuery& q) override;
  ScoreResult score(const ScoreQuery& q) override;

 private:
  PromptTemplate template_;
  std::map<std::string, std::string> answers_;
  std::map<std::string, std::size_t> option_answers_;
};

// Lexicon for ContextEchoModel: question -> golds of the record followed by
// the given extra answers for that record id.
ContextEchoModel::Lexicon echo_lexicon(
    const Dataset& dataset, const std::map<std::string, std::vector<std::string>>& extra_by_id = {});

/// Plants knowledge for round(fraction * N) records chosen by a seeded
/// shuffle. Free-form: planted questions answer their canonical gold and the
/// rest answer "UNKNOWN". Multiple choice: planted questions pick the correct
/// option, the rest pick (correct + 1) mod 4.
ParametricModel make_parametric(const Dataset& dataset, const PromptTemplate& tmpl,
                                double fraction, std::uint64_t seed);

}  // namespace ctxbench::mock
