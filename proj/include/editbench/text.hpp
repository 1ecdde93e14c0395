#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace editbench::text {

/// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

std::size_t codepoint_count(std::string_view s);

/// Simple case folding covering Latin, Greek and Cyrillic letters.
char32_t fold_case(char32_t c);
bool is_punctuation(char32_t c);
bool is_space(char32_t c);

/// Casefold, strip punctuation, collapse whitespace, trim.
std::string normalize(std::string_view s);

/// Whitespace-separated tokens of `normalize(s)`.
std::vector<std::string> tokens(std::string_view s);

/// Number of whitespace-separated words in the raw label.
std::size_t word_count(std::string_view s);

bool is_stopword(std::string_view token);

/// Tokens of `normalize(s)` that are not stopwords.
std::vector<std::string> content_tokens(std::string_view s);

/// True when the token sequence of `needle` occurs contiguously in `haystack`
/// (both normalized). An empty needle never matches.
bool contains_phrase(std::string_view haystack, std::string_view needle);

std::string trim(std::string_view s);

}  // namespace editbench::text
