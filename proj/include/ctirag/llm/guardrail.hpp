/// @file guardrail.hpp
/// @brief Domain check that rejects non-CTI questions before graph access.

#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ctirag::llm {

enum class GuardrailVerdict { Accept, Reject };

const char* to_string(GuardrailVerdict v);

/// Accepts a question that contains a CTI keyword (token match) or a known
/// entity name (phrase match, case-insensitive).
class Guardrail {
public:
    Guardrail();
    Guardrail(std::set<std::string> keywords, std::vector<std::string> entity_names);

    static const std::set<std::string>& default_keywords();

    void add_entities(const std::vector<std::string>& names);
    GuardrailVerdict check(std::string_view question) const;

private:
    std::set<std::string> keywords_;
    std::vector<std::string> entities_;
};

}  // namespace ctirag::llm
