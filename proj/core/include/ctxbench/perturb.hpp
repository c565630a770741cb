#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxbench/corpus.hpp"
#include "ctxbench/prompt.hpp"
#include "ctxbench/providers.hpp"

namespace ctxbench {

enum class VariantKind { Conflicting, Irrelevant, Distracted, ConflictingDistracted };

std::string_view to_string(VariantKind kind);
VariantKind variant_kind_from_string(std::string_view s);

struct PerturbationVariant {
  std::string source_id;
  VariantKind kind = VariantKind::Conflicting;
  std::size_t variant_index = 0;
  std::string context;
  // What an ideal model answers for this variant.
  std::string expected_answer;
  // Multiple choice conflicting variants: the wrong option that was
  // overwritten by expected_answer.
  std::optional<std::size_t> replaced_option_index;
  std::optional<std::string> distractor_text;
  std::uint64_t seed = 0;

  bool operator==(const PerturbationVariant&) const = default;
};

// Options shown to the model for a variant (multiple choice only): the
// source options with the replaced slot overwritten.
std::vector<std::string> variant_options(const QARecord& record, const PerturbationVariant& v);

// Index of the option an ideal model picks for the variant.
std::size_t variant_correct_option(const QARecord& record, const PerturbationVariant& v);

// Lowercase + whitespace-collapsed equality, or byte equality when strict.
bool same_answer(std::string_view a, std::string_view b, bool strict);

// ---------------------------------------------------------------------------
// Conflicting contexts

struct ConflictingOptions {
  std::size_t k = 10;
  bool strict_equality = false;
  std::uint64_t seed = 0;  // recorded on the variants for provenance
};

/// Masks the canonical answer span with a single sentinel, asks the fill
/// provider for k candidates and emits one variant per surviving candidate
/// (candidates equal to the original answer or to an earlier candidate are
/// dropped). Multiple choice: the lowest-index wrong option is overwritten
/// by the candidate.
///
/// Throws NoSurvivingCandidates when nothing survives, FillMaskFailure when
/// the provider fails, InvalidArgument when the answer has no verbatim span.
std::vector<PerturbationVariant> make_conflicting(const QARecord& record, FillMaskProvider& fill,
                                                  const ConflictingOptions& options = {});

// ---------------------------------------------------------------------------
// Irrelevant contexts

/// n contexts drawn uniformly from the distinct dataset contexts that differ
/// from the record's own; without replacement when at least n exist,
/// otherwise with replacement. Throws InsufficientContexts when none exist.
std::vector<PerturbationVariant> make_irrelevant(const QARecord& record, const Dataset& dataset,
                                                 std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Distractors

enum class DistractorPlacement { Append, Prepend };

std::string_view to_string(DistractorPlacement p);
DistractorPlacement distractor_placement_from_string(std::string_view s);

struct DistractorConfig {
  std::size_t length = 10;
  std::size_t max_epochs = 3;
  std::vector<std::string> pool_common_words;
  bool include_question_words = true;
  std::uint64_t seed = 0;
  DistractorPlacement placement = DistractorPlacement::Append;
};

void validate(const DistractorConfig& cfg);

// Common words followed by the question's words, first occurrence kept.
std::vector<std::string> candidate_pool(const DistractorConfig& cfg, std::string_view question);

struct DistractorTrace {
  // Objective in maximization form: perplexity (free-form) or the negated
  // probability of the correct option (multiple choice).
  double initial_objective = 0.0;
  std::vector<double> accepted_objectives;
  double final_objective = 0.0;
  std::size_t scorer_calls = 0;
  std::size_t epochs_run = 0;
};

struct DistractorOutcome {
  PerturbationVariant variant;
  std::vector<std::string> words;
  DistractorTrace trace;
};

/// ADDANY-style greedy coordinate search. The distractor starts as `length`
/// seeded draws from the pool; each epoch sweeps the positions in order,
/// scores every pool word at the position on the full prompt and keeps the
/// best one if it strictly improves the objective. Stops after an epoch
/// without changes or after max_epochs.
///
/// The base is the original context (kind Distracted, target = gold) or a
/// conflicting variant (kind ConflictingDistracted, target = the variant's
/// expected answer).
DistractorOutcome make_distractor(const QARecord& record, ScoringProvider& scorer,
                                  const DistractorConfig& cfg, const PromptTemplate& tmpl);
DistractorOutcome make_distractor(const QARecord& record, const PerturbationVariant& conflicting,
                                  ScoringProvider& scorer, const DistractorConfig& cfg,
                                  const PromptTemplate& tmpl);

// Attaches an existing distractor to a conflicting variant without searching.
PerturbationVariant attach_distractor(const PerturbationVariant& conflicting,
                                      const std::string& distractor_text,
                                      DistractorPlacement placement);

std::string place_distractor(std::string_view context, std::string_view distractor,
                             DistractorPlacement placement);

// Newline-delimited word file; blank lines and duplicates are skipped.
std::vector<std::string> load_word_pool(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Persistence

std::string to_jsonl_line(const PerturbationVariant& v);
PerturbationVariant variant_from_jsonl_line(std::string_view line);
std::vector<PerturbationVariant> read_variants(const std::filesystem::path& path);

}  // namespace ctxbench
