#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxbench {

// Bytes >= 0x80 count as word characters so UTF-8 sequences are never split.
bool is_word_byte(unsigned char c) noexcept;

/// First occurrence of `needle` in `haystack` that is anchored on word
/// boundaries. An edge of the needle that is itself a non-word character
/// (e.g. the trailing dot of "U.S.") needs no boundary on that side.
std::optional<std::size_t> find_verbatim(std::string_view haystack,
                                         std::string_view needle);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

std::string to_lower_ascii(std::string_view s);

// Trims and collapses runs of ASCII whitespace into a single space.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Whitespace tokens with leading/trailing punctuation stripped; empty tokens dropped.
std::vector<std::string> content_words(std::string_view s);

}  // namespace ctxbench
