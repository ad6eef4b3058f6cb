/// @file gateway.hpp
/// @brief Provider interface, request/response types and the Gateway that
/// renders prompts, records every call and enforces strict-JSON replies.

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/llm/prompts.hpp"

namespace ctirag::llm {

using Embedding = std::vector<double>;

enum class LlmErrc { ProviderError, MockExhausted, MissingSlot, JsonParse, BadScript };

const char* to_string(LlmErrc code);

class LlmError : public std::runtime_error {
public:
    LlmError(LlmErrc code, const std::string& what);
    LlmErrc code() const { return code_; }

private:
    LlmErrc code_;
};

struct Usage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t reasoning_tokens = 0;

    Usage& operator+=(const Usage& o);
    bool operator==(const Usage&) const = default;
};

struct LlmRequest {
    PromptRole role = PromptRole::AnswerRag;
    std::string prompt;
    std::string match_key;  // value of the role's primary slot
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string model;
};

struct LlmResponse {
    std::string text;
    Usage usage;
    double latency_s = 0.0;
    /// True when latency_s is simulated rather than measured wall time.
    bool simulated_latency = false;
    std::string model;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string model_id() const = 0;
    virtual std::string embedding_model_id() const = 0;
};

struct CallRecord {
    std::size_t seq = 0;
    PromptRole role = PromptRole::AnswerRag;
    std::string match_key;
    std::string model;
    Usage usage;
    double latency_s = 0.0;
    bool ok = true;
    std::string error;
};

nlohmann::json to_json(const CallRecord& r);

/// Thread-safe front door to a Provider. Every completion, failed or not,
/// lands in the call log.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<Provider> provider);

    LlmResponse complete(PromptRole role, const Slots& slots, int max_tokens = 1024);

    /// Completion whose reply must be strict JSON. A non-JSON reply triggers
    /// one re-ask with parse feedback in the `feedback` slot; a second
    /// failure raises LlmError(JsonParse).
    nlohmann::json complete_json(PromptRole role, Slots slots, LlmResponse* last = nullptr, int max_tokens = 2048);

    std::vector<Embedding> embed(const std::vector<std::string>& texts);

    std::vector<CallRecord> call_log() const;
    std::size_t call_count() const;
    Usage total_usage() const;
    void clear_log();

    Provider& provider() { return *provider_; }
    std::string model_id() const { return provider_->model_id(); }

private:
    std::shared_ptr<Provider> provider_;
    mutable std::mutex mu_;
    std::vector<CallRecord> log_;
};

/// Accepts a bare JSON document, optionally wrapped in one markdown code
/// fence. Anything else is an error.
std::optional<nlohmann::json> parse_strict_json(std::string_view text, std::string* error = nullptr);

/// Rough token estimate used by the mock provider: ceil(chars / 4).
std::int64_t estimate_tokens(std::string_view text);

}  // namespace ctirag::llm
