#include "ctxbench/text.hpp"

#include <cctype>

namespace ctxbench {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

bool is_word_byte(unsigned char c) noexcept {
  return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

std::optional<std::size_t> find_verbatim(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  const bool anchor_left = is_word_byte(static_cast<unsigned char>(needle.front()));
  const bool anchor_right = is_word_byte(static_cast<unsigned char>(needle.back()));
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + 1)) {
    const std::size_t end = pos + needle.size();
    const bool left_ok =
        !anchor_left || pos == 0 || !is_word_byte(static_cast<unsigned char>(haystack[pos - 1]));
    const bool right_ok = !anchor_right || end == haystack.size() ||
                          !is_word_byte(static_cast<unsigned char>(haystack[end]));
    if (left_ok && right_ok) return pos;
  }
  return std::nullopt;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& token : split_whitespace(s)) {
    std::size_t b = 0;
    std::size_t e = token.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1]))) --e;
    if (e > b) out.push_back(token.substr(b, e - b));
  }
  return out;
}

}  // namespace ctxbench
