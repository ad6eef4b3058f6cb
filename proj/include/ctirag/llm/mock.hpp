/// @file mock.hpp
/// @brief Deterministic scripted provider and hashed bag-of-words embeddings.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/llm/gateway.hpp"

namespace ctirag::llm {

/// FNV-1a hashed bag of normalized tokens, L2-normalized. Texts without
/// tokens map to the zero vector.
Embedding hashed_bow_embedding(std::string_view text, std::size_t dim = 1024);

struct ScriptedResponse {
    std::string text;
    std::optional<double> latency_s;
    std::int64_t reasoning_tokens = 0;
};

/// A responder computes a reply from the request's `<input>` block and the
/// script entry's `params` object.
using Responder =
    std::function<std::string(const nlohmann::json& input, const nlohmann::json& params, const LlmRequest& request)>;

struct ScriptEntry {
    PromptRole role = PromptRole::AnswerRag;
    std::string match = "*";  // case-insensitive substring of the match key, or "*"
    std::vector<ScriptedResponse> responses;
    std::string responder;  // used once `responses` are consumed; empty = none
    std::optional<double> latency_s;
    nlohmann::json params = nlohmann::json::object();
};

struct MockOptions {
    std::string model = "mock-llm";
    std::string embedding_model = "mock-hashed-bow";
    std::size_t embedding_dim = 1024;
    double base_latency_s = 0.5;
    double latency_per_output_token_s = 0.01;
};

/// Replays scripted replies per (role, match) entry. A specific entry whose
/// key occurs in the request beats a "*" entry; among equals the first in
/// script order wins. Entries keep their own cursor, and running past the
/// end of a list without a responder raises MockExhausted.
class ScriptedMock : public Provider {
public:
    explicit ScriptedMock(std::vector<ScriptEntry> entries = {}, MockOptions options = {});

    /// Script document: `{"model"?, "embedding_dim"?, "entries": [...]}` or a
    /// bare entry array. Entry: `{role, match, responses: [string |
    /// {text, latency_s?, reasoning_tokens?}], responder?, latency_s?}`.
    static std::unique_ptr<ScriptedMock> from_json(const nlohmann::json& doc);
    static std::unique_ptr<ScriptedMock> from_file(const std::filesystem::path& path);

    void add(ScriptEntry entry);
    void register_responder(const std::string& name, Responder fn);
    bool has_responder(const std::string& name) const;

    LlmResponse complete(const LlmRequest& request) override;
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    std::string model_id() const override { return options_.model; }
    std::string embedding_model_id() const override { return options_.embedding_model; }

    /// Scripted replies left for the entry at `index`.
    std::size_t remaining(std::size_t index) const;
    const std::vector<ScriptEntry>& entries() const { return entries_; }

private:
    MockOptions options_;
    std::vector<ScriptEntry> entries_;
    std::vector<std::size_t> cursor_;
    std::map<std::string, Responder> responders_;
    mutable std::mutex mu_;
};

/// Built-in responders used by the bundled toy script; registered by every
/// ScriptedMock. Names: constant (replies params.text), refuse,
/// extractive_answer, fewshot_cypher, critique, synthesize, heuristic_judge,
/// template_fewshots, template_qa, guided_qa, keyword_guardrail.
void register_builtin_responders(ScriptedMock& mock);

}  // namespace ctirag::llm
