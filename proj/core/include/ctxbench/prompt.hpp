#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ctxbench {

inline constexpr std::string_view kDefaultPattern = "question: {question}. context: {context}.";
inline constexpr std::string_view kDefaultClosedBookPattern = "question: {question}. context:";

struct PromptParts {
  std::string question;
  std::string context;
};

// Prompt layout with `{question}` and `{context}` placeholders. The closed-book
// pattern only carries `{question}`; it defaults to the contextual pattern with
// an empty context segment.
class PromptTemplate {
 public:
  PromptTemplate();
  explicit PromptTemplate(std::string pattern,
                          std::string closed_book_pattern = std::string(kDefaultClosedBookPattern));

  const std::string& pattern() const { return pattern_; }
  const std::string& closed_book_pattern() const { return closed_book_; }

  std::string render(std::string_view question, std::string_view context) const;
  std::string render_closed_book(std::string_view question) const;

  // Inverse of render / render_closed_book. Closed-book prompts come back
  // with an empty context. nullopt when the prompt does not fit either shape.
  std::optional<PromptParts> extract(std::string_view prompt) const;

  // Stable identity for cache keys.
  std::string fingerprint() const;

 private:
  std::string pattern_;
  std::string closed_book_;
};

}  // namespace ctxbench
