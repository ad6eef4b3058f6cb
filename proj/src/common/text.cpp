#include "ctirag/common/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace ctirag::text {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

constexpr std::array<std::string_view, 58> kStopwords = {
    "a",     "an",    "and",   "are",   "as",    "at",   "be",    "by",    "can",   "did",
    "do",    "does",  "for",   "from",  "had",   "has",  "have",  "how",   "i",     "if",
    "in",    "into",  "is",    "it",    "its",   "me",   "of",    "on",    "or",    "that",
    "the",   "their", "them",  "then",  "there", "these", "they", "this",  "to",    "was",
    "were",  "what",  "when",  "where", "which", "who",  "whom",  "why",   "with",  "you",
    "your",  "any",   "all",   "many",  "much",  "been", "being", "than"};

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> normalize_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : s) {
        if (c < 0x80 && (std::ispunct(c) || is_space(c))) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::size_t word_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

bool is_stopword(std::string_view token) {
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

std::vector<std::string> content_tokens(std::string_view s) {
    auto tokens = normalize_tokens(s);
    std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
    return tokens;
}

bool contains_phrase(std::string_view haystack, std::string_view needle) {
    const auto hay = normalize_tokens(haystack);
    const auto nee = normalize_tokens(needle);
    if (nee.empty() || nee.size() > hay.size()) return false;
    for (std::size_t i = 0; i + nee.size() <= hay.size(); ++i) {
        if (std::equal(nee.begin(), nee.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
    return false;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find('\n', start);
        if (pos == std::string_view::npos) {
            if (start < s.size()) lines.emplace_back(s.substr(start));
            break;
        }
        lines.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return lines;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (prefix.size() > s.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

}  // namespace ctirag::text
