#include "ctxbench/perturb.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxbench/error.hpp"
#include "ctxbench/random.hpp"
#include "ctxbench/text.hpp"

namespace ctxbench {

using nlohmann::json;

std::string_view to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::Conflicting: return "conflicting";
    case VariantKind::Irrelevant: return "irrelevant";
    case VariantKind::Distracted: return "distracted";
    case VariantKind::ConflictingDistracted: return "conflicting_distracted";
  }
  return "unknown";
}

VariantKind variant_kind_from_string(std::string_view s) {
  for (auto k : {VariantKind::Conflicting, VariantKind::Irrelevant, VariantKind::Distracted,
                 VariantKind::ConflictingDistracted}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::MalformedInput, "unknown variant kind '" + std::string(s) + "'");
}

std::string_view to_string(DistractorPlacement p) { return p == DistractorPlacement::Append ? "append" : "prepend"; }

DistractorPlacement distractor_placement_from_string(std::string_view s) {
  if (s == "append") return DistractorPlacement::Append;
  if (s == "prepend") return DistractorPlacement::Prepend;
  throw Error(ErrorCode::ConfigError, "distractor placement must be append or prepend, got '" + std::string(s) + "'");
}

std::vector<std::string> variant_options(const QARecord& record, const PerturbationVariant& v) {
  if (!record.options) throw Error(ErrorCode::InvalidArgument, "record '" + record.id + "' has no options");
  auto options = *record.options;
  if (v.replaced_option_index) options.at(*v.replaced_option_index) = v.expected_answer;
  return options;
}

std::size_t variant_correct_option(const QARecord& record, const PerturbationVariant& v) {
  if (!record.correct_option_index) {
    throw Error(ErrorCode::InvalidArgument, "record '" + record.id + "' is not multiple choice");
  }
  return v.replaced_option_index ? *v.replaced_option_index : *record.correct_option_index;
}

bool same_answer(std::string_view a, std::string_view b, bool strict) {
  if (strict) return a == b;
  return collapse_whitespace(to_lower_ascii(a)) == collapse_whitespace(to_lower_ascii(b));
}

// ---------------------------------------------------------------------------

std::vector<PerturbationVariant> make_conflicting(const QARecord& record, FillMaskProvider& fill,
                                                  const ConflictingOptions& options) {
  const auto span = canonical_span(record);
  if (!span) {
    throw Error(ErrorCode::InvalidArgument, "record '" + record.id + "': answer not found verbatim in context");
  }
  const std::string prefix = record.context.substr(0, span->begin);
  const std::string suffix = record.context.substr(span->begin + span->length);

  FillMaskResult candidates;
  try {
    FillMaskQuery query{prefix + std::string(kMaskToken) + suffix, options.k};
    candidates = conform_candidates(fill.fill_mask(query), options.k);
  } catch (const Error& e) {
    throw Error(ErrorCode::FillMaskFailure, "record '" + record.id + "': " + e.what());
  }

  std::optional<std::size_t> wrong_slot;
  if (record.task_kind == TaskKind::MultipleChoice) {
    for (std::size_t i = 0; i < record.options->size(); ++i) {
      if (i != *record.correct_option_index) {
        wrong_slot = i;
        break;
      }
    }
  }

  std::vector<std::string> survivors;
  for (const auto& c : candidates) {
    if (collapse_whitespace(c.text).empty()) continue;
    if (same_answer(c.text, record.canonical_answer(), options.strict_equality)) continue;
    const bool dup = std::any_of(survivors.begin(), survivors.end(), [&](const std::string& s) {
      return same_answer(s, c.text, options.strict_equality);
    });
    if (!dup) survivors.push_back(c.text);
  }
  if (survivors.empty()) {
    throw Error(ErrorCode::NoSurvivingCandidates,
                "record '" + record.id + "': all " + std::to_string(candidates.size()) +
                    " fill candidates match the original answer");
  }

  std::vector<PerturbationVariant> out;
  out.reserve(survivors.size());
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    PerturbationVariant v;
    v.source_id = record.id;
    v.kind = VariantKind::Conflicting;
    v.variant_index = i;
    v.context = prefix + survivors[i] + suffix;
    v.expected_answer = survivors[i];
    v.replaced_option_index = wrong_slot;
    v.seed = options.seed;
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<PerturbationVariant> make_irrelevant(const QARecord& record, const Dataset& dataset, std::size_t n,
                                                 std::uint64_t seed) {
  std::vector<const std::string*> others;
  std::set<std::string_view> seen;
  for (const auto& r : dataset.records) {
    if (r.context == record.context || !seen.insert(r.context).second) continue;
    others.push_back(&r.context);
  }
  if (others.empty()) {
    throw Error(ErrorCode::InsufficientContexts,
                "record '" + record.id + "': no other context in dataset '" + dataset.name + "'");
  }

  DeterministicRng rng(seed, "irrelevant:" + record.id);
  std::vector<std::size_t> picks;
  if (others.size() >= n) {
    std::vector<std::size_t> idx(others.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      picks.push_back(idx[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) picks.push_back(rng.below(others.size()));
  }

  std::vector<PerturbationVariant> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PerturbationVariant v;
    v.source_id = record.id;
    v.kind = VariantKind::Irrelevant;
    v.variant_index = i;
    v.context = *others[picks[i]];
    v.expected_answer = record.canonical_answer();
    v.seed = seed;
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

void validate(const DistractorConfig& cfg) {
  if (cfg.length == 0) throw Error(ErrorCode::InvalidArgument, "distractor length must be >= 1");
  if (cfg.max_epochs == 0) throw Error(ErrorCode::InvalidArgument, "distractor max_epochs must be >= 1");
}

std::vector<std::string> candidate_pool(const DistractorConfig& cfg, std::string_view question) {
  std::vector<std::string> pool;
  std::set<std::string> seen;
  auto add = [&](const std::string& w) {
    if (!w.empty() && seen.insert(w).second) pool.push_back(w);
  };
  for (const auto& w : cfg.pool_common_words) add(w);
  if (cfg.include_question_words) {
    for (const auto& w : content_words(question)) add(w);
  }
  return pool;
}

std::string place_distractor(std::string_view context, std::string_view distractor, DistractorPlacement placement) {
  if (context.empty()) return std::string(distractor);
  std::string out;
  if (placement == DistractorPlacement::Append) {
    out.append(context).append(" ").append(distractor);
  } else {
    out.append(distractor).append(" ").append(context);
  }
  return out;
}

namespace {

struct SearchTarget {
  std::string question;
  std::string base_context;
  // Free-form: the answer whose perplexity is maximized.
  std::string answer;
  // Multiple choice: options shown and the index whose probability is minimized.
  std::optional<std::vector<std::string>> options;
  std::size_t correct = 0;
};

DistractorOutcome search(const SearchTarget& target, const PerturbationVariant& base_variant,
                         VariantKind kind, ScoringProvider& scorer, const DistractorConfig& cfg,
                         const PromptTemplate& tmpl) {
  validate(cfg);
  const auto pool = candidate_pool(cfg, target.question);
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "no candidate words for record '" + base_variant.source_id + "'");

  DeterministicRng rng(cfg.seed, "distractor:" + base_variant.source_id + ":" + std::string(to_string(kind)) + ":" +
                                     std::to_string(base_variant.variant_index));
  std::vector<std::size_t> words(cfg.length);
  for (auto& w : words) w = rng.below(pool.size());

  auto render_words = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> text;
    text.reserve(idx.size());
    for (auto i : idx) text.push_back(pool[i]);
    return text;
  };

  DistractorTrace trace;
  std::optional<double> current;
  std::vector<ScoreQuery> queries(pool.size());
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    ++trace.epochs_run;
    bool changed = false;
    for (std::size_t pos = 0; pos < words.size(); ++pos) {
      auto trial = words;
      for (std::size_t c = 0; c < pool.size(); ++c) {
        trial[pos] = c;
        const std::string context = place_distractor(target.base_context, join(render_words(trial), " "), cfg.placement);
        std::string prompt = tmpl.render(target.question, context);
        queries[c] = target.options ? ScoreQuery::options(std::move(prompt), *target.options)
                                    : ScoreQuery::continuation(std::move(prompt), target.answer);
      }
      std::vector<ScoreResult> results;
      try {
        results = scorer.score_batch(queries);
        if (results.size() != queries.size()) throw Error(ErrorCode::ProtocolError, "scorer batch size mismatch");
        for (std::size_t c = 0; c < results.size(); ++c) check_score_result(queries[c], results[c]);
      } catch (const Error& e) {
        throw Error(ErrorCode::ScorerFailure, "record '" + base_variant.source_id + "': " + e.what());
      }
      trace.scorer_calls += queries.size();

      std::vector<double> objective(results.size());
      for (std::size_t c = 0; c < results.size(); ++c) {
        objective[c] = target.options ? -results[c].option_probs().at(target.correct) : results[c].perplexity();
      }
      // The current word is in the pool, so its trial is the current objective.
      const bool first = !current.has_value();
      current = objective[words[pos]];
      if (first) trace.initial_objective = *current;
      // Lowest pool index wins ties.
      const auto best = static_cast<std::size_t>(std::max_element(objective.begin(), objective.end()) - objective.begin());
      if (objective[best] > *current) {
        words[pos] = best;
        current = objective[best];
        trace.accepted_objectives.push_back(*current);
        changed = true;
      }
    }
    if (!changed) break;
  }
  trace.final_objective = *current;

  DistractorOutcome outcome;
  outcome.words = render_words(words);
  outcome.trace = std::move(trace);
  PerturbationVariant v = base_variant;
  v.kind = kind;
  v.distractor_text = join(outcome.words, " ");
  v.context = place_distractor(target.base_context, *v.distractor_text, cfg.placement);
  v.seed = cfg.seed;
  outcome.variant = std::move(v);
  return outcome;
}

}  // namespace

DistractorOutcome make_distractor(const QARecord& record, ScoringProvider& scorer, const DistractorConfig& cfg,
                                  const PromptTemplate& tmpl) {
  SearchTarget target{record.question, record.context, record.canonical_answer(), record.options,
                      record.correct_option_index.value_or(0)};
  PerturbationVariant base;
  base.source_id = record.id;
  base.expected_answer = record.canonical_answer();
  return search(target, base, VariantKind::Distracted, scorer, cfg, tmpl);
}

DistractorOutcome make_distractor(const QARecord& record, const PerturbationVariant& conflicting,
                                  ScoringProvider& scorer, const DistractorConfig& cfg, const PromptTemplate& tmpl) {
  if (conflicting.kind != VariantKind::Conflicting) {
    throw Error(ErrorCode::InvalidArgument, "distractor base variant must be conflicting");
  }
  SearchTarget target{record.question, conflicting.context, conflicting.expected_answer, std::nullopt, 0};
  if (record.task_kind == TaskKind::MultipleChoice) {
    target.options = variant_options(record, conflicting);
    target.correct = variant_correct_option(record, conflicting);
  }
  return search(target, conflicting, VariantKind::ConflictingDistracted, scorer, cfg, tmpl);
}

PerturbationVariant attach_distractor(const PerturbationVariant& conflicting, const std::string& distractor_text,
                                      DistractorPlacement placement) {
  PerturbationVariant v = conflicting;
  v.kind = VariantKind::ConflictingDistracted;
  v.distractor_text = distractor_text;
  v.context = place_distractor(conflicting.context, distractor_text, placement);
  return v;
}

std::vector<std::string> load_word_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open word pool " + path.string());
  std::vector<std::string> words;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = collapse_whitespace(line);
    if (!w.empty() && seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// ---------------------------------------------------------------------------

std::string to_jsonl_line(const PerturbationVariant& v) {
  nlohmann::ordered_json j;
  j["source_id"] = v.source_id;
  j["kind"] = to_string(v.kind);
  j["variant_index"] = v.variant_index;
  j["context"] = v.context;
  j["expected_answer"] = v.expected_answer;
  j["replaced_option_index"] = v.replaced_option_index ? json(*v.replaced_option_index) : json(nullptr);
  j["distractor_text"] = v.distractor_text ? json(*v.distractor_text) : json(nullptr);
  j["seed"] = v.seed;
  return j.dump();
}

PerturbationVariant variant_from_jsonl_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    PerturbationVariant v;
    v.source_id = j.at("source_id").get<std::string>();
    v.kind = variant_kind_from_string(j.at("kind").get<std::string>());
    v.variant_index = j.at("variant_index").get<std::size_t>();
    v.context = j.at("context").get<std::string>();
    v.expected_answer = j.at("expected_answer").get<std::string>();
    if (const auto& r = j.at("replaced_option_index"); !r.is_null()) v.replaced_option_index = r.get<std::size_t>();
    if (const auto& d = j.at("distractor_text"); !d.is_null()) v.distractor_text = d.get<std::string>();
    v.seed = j.at("seed").get<std::uint64_t>();
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("variant line: ") + e.what());
  }
}

std::vector<PerturbationVariant> read_variants(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingVariants, "cannot open " + path.string());
  std::vector<PerturbationVariant> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (collapse_whitespace(line).empty()) continue;
    try {
      out.push_back(variant_from_jsonl_line(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedInput, path.string() + ":" + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return out;
}

}  // namespace ctxbench
