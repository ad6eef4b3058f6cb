/// @file prompts.hpp
/// @brief Prompt roles, their templates and slot rendering.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctirag::llm {

enum class PromptRole {
    IngestToCypher,
    FewshotPairs,
    QaFromCypher,
    GuidedQa,
    AnswerRag,
    GenCypher,
    CritiqueCypher,
    SynthesizeHybrid,
    Judge,
    Guardrail,
};

/// Upper-snake names, e.g. "GEN_CYPHER".
const char* to_string(PromptRole role);
std::optional<PromptRole> role_from_string(std::string_view name);
const std::vector<PromptRole>& all_roles();

using Slots = std::map<std::string, std::string>;

/// Raw template text with `{{slot}}` placeholders.
const std::string& template_text(PromptRole role);

/// Slot names referenced by the role's template, sorted.
std::vector<std::string> template_slots(PromptRole role);

/// Slot whose value identifies the request to a scripted mock (e.g. the
/// question for answering roles).
const char* primary_slot(PromptRole role);

/// Fills every placeholder and appends an `<input>` block holding the slots
/// as a JSON object. Throws LlmError(MissingSlot) when a referenced slot has
/// no value. Extra slots are allowed and only appear in the input block.
std::string render_prompt(PromptRole role, const Slots& slots);

/// Parses the `<input>` block of a rendered prompt; empty object if absent.
nlohmann::json input_block(std::string_view prompt);

inline constexpr const char* kRefusalPhrase = "insufficient information in the provided context";

/// Canonical refusal phrase, or one of a few common abstention forms.
bool is_refusal_text(std::string_view answer);

}  // namespace ctirag::llm
