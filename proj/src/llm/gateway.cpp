#include "ctirag/llm/gateway.hpp"

#include <chrono>

#include "ctirag/common/text.hpp"

namespace ctirag::llm {

const char* to_string(LlmErrc code) {
    switch (code) {
        case LlmErrc::ProviderError: return "ProviderError";
        case LlmErrc::MockExhausted: return "MockExhausted";
        case LlmErrc::MissingSlot: return "MissingSlot";
        case LlmErrc::JsonParse: return "JsonParse";
        case LlmErrc::BadScript: return "BadScript";
    }
    return "LlmError";
}

LlmError::LlmError(LlmErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

Usage& Usage::operator+=(const Usage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    reasoning_tokens += o.reasoning_tokens;
    return *this;
}

nlohmann::json to_json(const CallRecord& r) {
    nlohmann::json j{{"seq", r.seq},
                     {"role", to_string(r.role)},
                     {"match_key", r.match_key},
                     {"model", r.model},
                     {"input_tokens", r.usage.input_tokens},
                     {"output_tokens", r.usage.output_tokens},
                     {"reasoning_tokens", r.usage.reasoning_tokens},
                     {"latency_s", r.latency_s},
                     {"ok", r.ok}};
    if (!r.ok) j["error"] = r.error;
    return j;
}

std::int64_t estimate_tokens(std::string_view text) { return static_cast<std::int64_t>((text.size() + 3) / 4); }

std::optional<nlohmann::json> parse_strict_json(std::string_view raw, std::string* error) {
    std::string t = text::trim(raw);
    if (t.rfind("```", 0) == 0) {
        const auto nl = t.find('\n');
        const auto close = t.rfind("```");
        if (nl != std::string::npos && close != std::string::npos && close > nl) t = text::trim(t.substr(nl + 1, close - nl - 1));
    }
    try {
        return nlohmann::json::parse(t);
    } catch (const nlohmann::json::parse_error& e) {
        if (error) *error = e.what();
        return std::nullopt;
    }
}

Gateway::Gateway(std::shared_ptr<Provider> provider) : provider_(std::move(provider)) {
    if (!provider_) throw std::invalid_argument("Gateway needs a provider");
}

LlmResponse Gateway::complete(PromptRole role, const Slots& slots, int max_tokens) {
    LlmRequest req;
    req.role = role;
    req.prompt = render_prompt(role, slots);
    if (auto it = slots.find(primary_slot(role)); it != slots.end()) req.match_key = it->second;
    req.max_tokens = max_tokens;
    req.model = provider_->model_id();

    CallRecord rec;
    rec.role = role;
    rec.match_key = req.match_key.substr(0, 200);
    rec.model = req.model;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        LlmResponse resp = provider_->complete(req);
        rec.usage = resp.usage;
        rec.latency_s = resp.latency_s;
        std::lock_guard lock(mu_);
        rec.seq = log_.size();
        log_.push_back(rec);
        return resp;
    } catch (const LlmError& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard lock(mu_);
        rec.seq = log_.size();
        log_.push_back(rec);
        throw;
    }
}

nlohmann::json Gateway::complete_json(PromptRole role, Slots slots, LlmResponse* last, int max_tokens) {
    if (!slots.count("feedback")) slots["feedback"] = "";
    const std::string base_feedback = slots["feedback"];
    std::string err;
    for (int attempt = 0; attempt < 2; ++attempt) {
        LlmResponse resp = complete(role, slots, max_tokens);
        if (last) *last = resp;
        if (auto j = parse_strict_json(resp.text, &err)) return *j;
        slots["feedback"] = base_feedback + (base_feedback.empty() ? "" : "\n") +
                            "Your previous reply was not valid JSON (" + err + "). Reply with JSON only.";
    }
    throw LlmError(LlmErrc::JsonParse, std::string(to_string(role)) + " reply is not valid JSON after one re-ask: " + err);
}

std::vector<Embedding> Gateway::embed(const std::vector<std::string>& texts) { return provider_->embed(texts); }

std::vector<CallRecord> Gateway::call_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::size_t Gateway::call_count() const {
    std::lock_guard lock(mu_);
    return log_.size();
}

Usage Gateway::total_usage() const {
    std::lock_guard lock(mu_);
    Usage u;
    for (const auto& r : log_) u += r.usage;
    return u;
}

void Gateway::clear_log() {
    std::lock_guard lock(mu_);
    log_.clear();
}

}  // namespace ctirag::llm
