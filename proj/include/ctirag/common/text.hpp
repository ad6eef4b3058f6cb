/// @file text.hpp
/// @brief Shared text normalization helpers.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ctirag::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Lowercase, replace ASCII punctuation with spaces, split on whitespace.
/// This is the tokenizer behind every lexical metric and the keyword index.
std::vector<std::string> normalize_tokens(std::string_view s);

/// Whitespace-delimited word count of the raw string.
std::size_t word_count(std::string_view s);

bool is_stopword(std::string_view token);

/// normalize_tokens() minus stopwords.
std::vector<std::string> content_tokens(std::string_view s);

/// Case-insensitive check that `needle` occurs in `haystack` on word boundaries.
bool contains_phrase(std::string_view haystack, std::string_view needle);

std::vector<std::string> split_lines(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace ctirag::text
