#include "ctxbench/mock_providers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ctxbench/error.hpp"
#include "ctxbench/random.hpp"
#include "ctxbench/text.hpp"

namespace ctxbench::mock {

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - hi);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

PromptParts parts_or_throw(const PromptTemplate& tmpl, const std::string& prompt) {
  auto parts = tmpl.extract(prompt);
  if (!parts) throw Error(ErrorCode::ProtocolError, "prompt does not follow the template: " + prompt);
  return *parts;
}

// Probability `peak` on `index`, the rest shared evenly.
std::vector<double> peaked(std::size_t n, std::size_t index, double peak) {
  if (n == 1) return {1.0};
  std::vector<double> out(n, (1.0 - peak) / static_cast<double>(n - 1));
  out[index] = peak;
  return out;
}

}  // namespace

FillMaskResult TableFillMask::fill_mask(const FillMaskQuery& q) {
  validate(q);
  FillMaskResult out;
  for (const auto& [key, candidates] : entries_) {
    if (q.masked_text.find(key) == std::string::npos) continue;
    for (std::size_t i = 0; i < candidates.size() && out.size() < q.top_k; ++i) {
      out.push_back({candidates[i], 1.0 / static_cast<double>(i + 1)});
    }
    break;
  }
  return out;
}

FillMaskResult GeneratedFillMask::fill_mask(const FillMaskQuery& q) {
  static constexpr std::string_view kSyllables[] = {"zor", "vel", "mak", "tri", "qua", "lox", "dra", "fen",
                                                    "kiv", "sul", "bry", "nom", "pex", "jad", "wix", "tor"};
  constexpr std::size_t kCount = std::size(kSyllables);
  validate(q);
  DeterministicRng rng(seed_, q.masked_text);
  const std::size_t want = std::min(count_, q.top_k);
  std::set<std::string> seen;
  FillMaskResult out;
  while (out.size() < want) {
    std::string name;
    for (int s = 0; s < 3; ++s) name += kSyllables[rng.below(kCount)];
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    if (!seen.insert(name).second) continue;
    out.push_back({name, 1.0 / static_cast<double>(out.size() + 1)});
  }
  return out;
}

ScoreResult UniformScorer::score(const ScoreQuery& q) {
  validate(q);
  if (q.is_options()) return ScoreResult::from_probs(uniform(q.option_texts().size()));
  return ScoreResult::from_perplexity(1.0);
}

ScoreResult LogitScorer::score(const ScoreQuery& q) {
  validate(q);
  if (!q.is_options()) throw Error(ErrorCode::ModeMismatch, "LogitScorer only scores options");
  if (q.option_texts().size() != logits_.size()) {
    throw Error(ErrorCode::InvalidArgument, "LogitScorer configured for " + std::to_string(logits_.size()) +
                                                " options");
  }
  return ScoreResult::from_probs(softmax(logits_));
}

ScoreResult PlantedTokenScorer::score(const ScoreQuery& q) {
  validate(q);
  if (q.is_options()) throw Error(ErrorCode::ModeMismatch, "PlantedTokenScorer only scores continuations");
  std::size_t hits = 0;
  for (const auto& w : content_words(q.prompt)) {
    if (std::find(planted_.begin(), planted_.end(), w) != planted_.end()) ++hits;
  }
  return ScoreResult::from_perplexity(1.0 + static_cast<double>(hits));
}

double SeparableScorer::objective(const std::vector<std::string>& words) const {
  double total = 0.0;
  const std::size_t d = weights_.size();
  const std::size_t take = std::min(d, words.size());
  const std::size_t start = words.size() - take;
  for (std::size_t j = 0; j < take; ++j) {
    const auto& table = weights_[d - take + j];
    if (auto it = table.find(words[start + j]); it != table.end()) total += it->second;
  }
  return total;
}

ScoreResult SeparableScorer::score(const ScoreQuery& q) {
  validate(q);
  if (q.is_options()) throw Error(ErrorCode::ModeMismatch, "SeparableScorer only scores continuations");
  const auto parts = parts_or_throw(template_, q.prompt);
  return ScoreResult::from_perplexity(1.0 + objective(split_whitespace(parts.context)));
}

ScoreResult NoisyScorer::score(const ScoreQuery& q) {
  validate(q);
  if (!q.is_options()) {
    DeterministicRng rng(seed_, q.prompt + '\x1f' + q.continuation_text());
    return ScoreResult::from_perplexity(1.0 + 10.0 * rng.unit());
  }
  std::string salt = q.prompt;
  for (const auto& o : q.option_texts()) salt += '\x1f' + o;
  DeterministicRng rng(seed_, salt);
  std::vector<double> logits(q.option_texts().size());
  for (double& l : logits) l = -3.0 + 6.0 * rng.unit();
  return ScoreResult::from_probs(softmax(logits));
}

GenerateResult ContextEchoModel::generate(const GenerateQuery& q) {
  validate(q);
  const auto parts = parts_or_throw(template_, q.prompt);
  auto it = lexicon_.find(parts.question);
  if (it == lexicon_.end() || parts.context.empty()) return {std::string(kUnknownAnswer)};
  std::optional<std::size_t> best_pos;
  const std::string* best = nullptr;
  for (const auto& candidate : it->second) {
    auto pos = find_verbatim(parts.context, candidate);
    if (!pos) continue;
    if (!best_pos || *pos < *best_pos || (*pos == *best_pos && candidate.size() > best->size())) {
      best_pos = pos;
      best = &candidate;
    }
  }
  return {best ? *best : std::string(kUnknownAnswer)};
}

ScoreResult ContextEchoModel::score(const ScoreQuery& q) {
  validate(q);
  const auto parts = parts_or_throw(template_, q.prompt);
  if (!q.is_options()) {
    const bool present = find_verbatim(parts.context, q.continuation_text()).has_value();
    return ScoreResult::from_perplexity(present ? 1.0 : 50.0);
  }
  const auto& options = q.option_texts();
  std::optional<std::size_t> best_pos;
  std::size_t best = 0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    auto pos = find_verbatim(parts.context, options[i]);
    if (pos && (!best_pos || *pos < *best_pos)) {
      best_pos = pos;
      best = i;
    }
  }
  if (!best_pos) return ScoreResult::from_probs(uniform(options.size()));
  return ScoreResult::from_probs(peaked(options.size(), best, 1.0));
}

GenerateResult ParametricModel::generate(const GenerateQuery& q) {
  validate(q);
  const auto parts = parts_or_throw(template_, q.prompt);
  auto it = answers_.find(parts.question);
  return {it == answers_.end() ? std::string(kUnknownAnswer) : it->second};
}

ScoreResult ParametricModel::score(const ScoreQuery& q) {
  validate(q);
  const auto parts = parts_or_throw(template_, q.prompt);
  if (!q.is_options()) {
    auto it = answers_.find(parts.question);
    const bool own = it != answers_.end() && it->second == q.continuation_text();
    return ScoreResult::from_perplexity(own ? 1.0 : 50.0);
  }
  const std::size_t n = q.option_texts().size();
  auto it = option_answers_.find(parts.question);
  if (it == option_answers_.end() || it->second >= n) return ScoreResult::from_probs(uniform(n));
  return ScoreResult::from_probs(peaked(n, it->second, 0.97));
}

ContextEchoModel::Lexicon echo_lexicon(const Dataset& dataset,
                                       const std::map<std::string, std::vector<std::string>>& extra_by_id) {
  ContextEchoModel::Lexicon lexicon;
  for (const auto& r : dataset.records) {
    auto& entry = lexicon[r.question];
    auto add = [&entry](const std::string& s) {
      if (std::find(entry.begin(), entry.end(), s) == entry.end()) entry.push_back(s);
    };
    for (const auto& g : r.gold_answers) add(g);
    if (auto it = extra_by_id.find(r.id); it != extra_by_id.end()) {
      for (const auto& s : it->second) add(s);
    }
  }
  return lexicon;
}

ParametricModel make_parametric(const Dataset& dataset, const PromptTemplate& tmpl, double fraction,
                                std::uint64_t seed) {
  const std::size_t n = dataset.records.size();
  const auto planted = static_cast<std::size_t>(std::llround(std::clamp(fraction, 0.0, 1.0) * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  DeterministicRng rng(seed, "parametric");
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<bool> is_planted(n, false);
  for (std::size_t i = 0; i < planted; ++i) is_planted[order[i]] = true;

  std::map<std::string, std::string> answers;
  std::map<std::string, std::size_t> option_answers;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = dataset.records[i];
    if (r.task_kind == TaskKind::MultipleChoice) {
      const std::size_t correct = *r.correct_option_index;
      option_answers[r.question] = is_planted[i] ? correct : (correct + 1) % r.options->size();
    } else if (is_planted[i]) {
      answers[r.question] = r.canonical_answer();
    }
  }
  return ParametricModel(tmpl, std::move(answers), std::move(option_answers));
}

}  // namespace ctxbench::mock
