/// @file responders.hpp
/// @brief Template question generation and text heuristics behind the
/// built-in mock responders.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ctirag/graph/property_graph.hpp"

namespace ctirag::llm {

struct TemplateItem {
    std::string category;  // SIMPLE, SINGLE_HOP, MULTI_HOP, UNANSWERABLE
    std::string question;
    std::string cypher;
    bool aggregate = false;
};

/// Candidate questions for every category, in deterministic graph order.
/// Answerable items are non-empty on `graph`; UNANSWERABLE items are empty.
std::vector<TemplateItem> template_items(const graph::PropertyGraph& graph);

/// Builds a fresh frozen graph from a MERGE script, skipping statements that
/// fail to parse or execute.
graph::PropertyGraph scratch_graph(std::string_view statements);

/// "ThreatActor" -> "threat actor", "C2_Infrastructure" -> "C2 infrastructure".
std::string human_label(std::string_view label);

/// Sentence split on '.', '!', '?' and newlines; trimmed, non-empty.
std::vector<std::string> split_sentences(std::string_view text);

/// Content tokens of a question minus interrogative filler.
std::vector<std::string> question_terms(std::string_view question);

/// Sentence with the most distinct question terms; empty when none overlap.
std::string best_sentence(std::string_view question, std::string_view text);

/// Rewrites a few-shot query for `question` when both questions share the
/// few-shot's skeleton around its single string literal.
std::string adapt_fewshot(std::string_view fewshot_question, std::string_view fewshot_cypher,
                          std::string_view question);

/// Longest capitalized or digit-bearing span after the first word.
std::string guess_entity(std::string_view question);

}  // namespace ctirag::llm
