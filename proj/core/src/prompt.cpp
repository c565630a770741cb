#include "ctxbench/prompt.hpp"

#include <vector>

#include "ctxbench/error.hpp"
#include "ctxbench/hash.hpp"
#include "ctxbench/text.hpp"

namespace ctxbench {

namespace {

constexpr std::string_view kQuestion = "{question}";
constexpr std::string_view kContext = "{context}";

struct Piece {
  bool placeholder;
  std::string text;  // literal text or placeholder name
};

std::vector<Piece> tokenize(std::string_view pattern) {
  std::vector<Piece> pieces;
  std::string literal;
  std::size_t i = 0;
  while (i < pattern.size()) {
    const auto rest = pattern.substr(i);
    if (rest.starts_with(kQuestion) || rest.starts_with(kContext)) {
      const auto& ph = rest.starts_with(kQuestion) ? kQuestion : kContext;
      pieces.push_back({false, literal});
      literal.clear();
      pieces.push_back({true, std::string(ph)});
      i += ph.size();
    } else {
      literal.push_back(pattern[i++]);
    }
  }
  pieces.push_back({false, literal});
  return pieces;
}

// Matches prompt against the literal/placeholder sequence; placeholders take
// the shortest text up to the next literal, the last one runs to the suffix.
std::optional<PromptParts> match(std::string_view pattern, std::string_view prompt) {
  const auto pieces = tokenize(pattern);
  PromptParts parts;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    if (!p.placeholder) {
      if (prompt.substr(pos).substr(0, p.text.size()) != p.text) return std::nullopt;
      pos += p.text.size();
      continue;
    }
    const Piece& next = pieces[i + 1];
    const bool last_literal = i + 2 == pieces.size();
    std::size_t end;
    if (last_literal) {
      if (prompt.size() < pos + next.text.size() || !prompt.ends_with(next.text)) return std::nullopt;
      end = prompt.size() - next.text.size();
    } else {
      end = next.text.empty() ? pos : prompt.find(next.text, pos);
      if (end == std::string_view::npos) return std::nullopt;
    }
    std::string value(prompt.substr(pos, end - pos));
    (p.text == kQuestion ? parts.question : parts.context) = std::move(value);
    pos = end;
  }
  if (pos != prompt.size()) return std::nullopt;
  return parts;
}

std::string replace_once(std::string s, std::string_view from, std::string_view to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

PromptTemplate::PromptTemplate()
    : PromptTemplate(std::string(kDefaultPattern), std::string(kDefaultClosedBookPattern)) {}

PromptTemplate::PromptTemplate(std::string pattern, std::string closed_book_pattern)
    : pattern_(std::move(pattern)), closed_book_(std::move(closed_book_pattern)) {
  if (count_occurrences(pattern_, kQuestion) != 1 || count_occurrences(pattern_, kContext) != 1) {
    throw Error(ErrorCode::InvalidArgument,
                "prompt pattern needs exactly one {question} and one {context}: " + pattern_);
  }
  if (count_occurrences(closed_book_, kQuestion) != 1 || count_occurrences(closed_book_, kContext) != 0) {
    throw Error(ErrorCode::InvalidArgument,
                "closed-book pattern needs exactly one {question} and no {context}: " + closed_book_);
  }
}

std::string PromptTemplate::render(std::string_view question, std::string_view context) const {
  // Substitute context first so a question containing "{context}" is inert.
  const auto qpos = pattern_.find(kQuestion);
  const auto cpos = pattern_.find(kContext);
  std::string out;
  if (qpos < cpos) {
    out.append(pattern_, 0, qpos).append(question);
    out.append(pattern_, qpos + kQuestion.size(), cpos - qpos - kQuestion.size()).append(context);
    out.append(pattern_, cpos + kContext.size());
  } else {
    out.append(pattern_, 0, cpos).append(context);
    out.append(pattern_, cpos + kContext.size(), qpos - cpos - kContext.size()).append(question);
    out.append(pattern_, qpos + kQuestion.size());
  }
  return out;
}

std::string PromptTemplate::render_closed_book(std::string_view question) const {
  return replace_once(closed_book_, kQuestion, question);
}

std::optional<PromptParts> PromptTemplate::extract(std::string_view prompt) const {
  if (auto parts = match(pattern_, prompt)) return parts;
  return match(closed_book_, prompt);
}

std::string PromptTemplate::fingerprint() const {
  std::string material = pattern_;
  material.push_back('\0');
  material += closed_book_;
  return sha256_hex(material);
}

}  // namespace ctxbench
