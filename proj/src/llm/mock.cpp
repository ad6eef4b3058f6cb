#include "ctirag/llm/mock.hpp"

#include <cmath>

#include "ctirag/common/io.hpp"
#include "ctirag/common/text.hpp"

namespace ctirag::llm {

Embedding hashed_bow_embedding(std::string_view text, std::size_t dim) {
    Embedding v(dim, 0.0);
    if (dim == 0) return v;
    for (const auto& tok : text::normalize_tokens(text)) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : tok) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        v[h % dim] += 1.0;
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    if (norm > 0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

ScriptedMock::ScriptedMock(std::vector<ScriptEntry> entries, MockOptions options)
    : options_(std::move(options)), entries_(std::move(entries)), cursor_(entries_.size(), 0) {
    register_builtin_responders(*this);
}

namespace {

ScriptEntry entry_from_json(const nlohmann::json& j) {
    ScriptEntry e;
    const std::string role = j.at("role").get<std::string>();
    auto r = role_from_string(role);
    if (!r) throw LlmError(LlmErrc::BadScript, "unknown role '" + role + "'");
    e.role = *r;
    e.match = j.value("match", std::string("*"));
    if (j.contains("responses")) {
        for (const auto& x : j.at("responses")) {
            if (x.is_string()) {
                e.responses.push_back(ScriptedResponse{x.get<std::string>(), std::nullopt, 0});
            } else {
                ScriptedResponse s;
                s.text = x.at("text").get<std::string>();
                if (x.contains("latency_s")) s.latency_s = x.at("latency_s").get<double>();
                s.reasoning_tokens = x.value("reasoning_tokens", std::int64_t{0});
                e.responses.push_back(std::move(s));
            }
        }
    }
    e.responder = j.value("responder", std::string());
    if (j.contains("latency_s")) e.latency_s = j.at("latency_s").get<double>();
    if (j.contains("params")) e.params = j.at("params");
    if (e.responses.empty() && e.responder.empty())
        throw LlmError(LlmErrc::BadScript, "entry for " + role + " has neither responses nor a responder");
    return e;
}

}  // namespace

std::unique_ptr<ScriptedMock> ScriptedMock::from_json(const nlohmann::json& doc) {
    MockOptions opts;
    const nlohmann::json* list = &doc;
    if (doc.is_object()) {
        opts.model = doc.value("model", opts.model);
        opts.embedding_dim = doc.value("embedding_dim", opts.embedding_dim);
        opts.base_latency_s = doc.value("base_latency_s", opts.base_latency_s);
        opts.latency_per_output_token_s = doc.value("latency_per_output_token_s", opts.latency_per_output_token_s);
        if (!doc.contains("entries")) throw LlmError(LlmErrc::BadScript, "script object needs an 'entries' array");
        list = &doc.at("entries");
    }
    if (!list->is_array()) throw LlmError(LlmErrc::BadScript, "script entries must be an array");
    std::vector<ScriptEntry> entries;
    try {
        for (const auto& j : *list) entries.push_back(entry_from_json(j));
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(LlmErrc::BadScript, e.what());
    }
    auto mock = std::make_unique<ScriptedMock>(std::move(entries), opts);
    for (const auto& e : mock->entries_) {
        if (!e.responder.empty() && !mock->has_responder(e.responder))
            throw LlmError(LlmErrc::BadScript, "unknown responder '" + e.responder + "'");
    }
    return mock;
}

std::unique_ptr<ScriptedMock> ScriptedMock::from_file(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(LlmErrc::BadScript, path.string() + ": " + e.what());
    }
    return from_json(doc);
}

void ScriptedMock::add(ScriptEntry entry) {
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(entry));
    cursor_.push_back(0);
}

void ScriptedMock::register_responder(const std::string& name, Responder fn) {
    std::lock_guard lock(mu_);
    responders_[name] = std::move(fn);
}

bool ScriptedMock::has_responder(const std::string& name) const {
    std::lock_guard lock(mu_);
    return responders_.count(name) > 0;
}

std::size_t ScriptedMock::remaining(std::size_t index) const {
    std::lock_guard lock(mu_);
    return entries_.at(index).responses.size() - cursor_.at(index);
}

LlmResponse ScriptedMock::complete(const LlmRequest& request) {
    std::optional<std::size_t> chosen;
    ScriptedResponse reply;
    Responder responder;
    nlohmann::json params;
    {
        std::lock_guard lock(mu_);
        const std::string key = text::to_lower(request.match_key);
        std::optional<std::size_t> wildcard;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (e.role != request.role) continue;
            if (e.match == "*") {
                if (!wildcard) wildcard = i;
            } else if (key.find(text::to_lower(e.match)) != std::string::npos) {
                chosen = i;
                break;
            }
        }
        if (!chosen) chosen = wildcard;
        if (!chosen)
            throw LlmError(LlmErrc::MockExhausted, std::string("no script entry for ") + to_string(request.role) +
                                                       " with key '" + request.match_key.substr(0, 80) + "'");
        const auto& e = entries_[*chosen];
        if (cursor_[*chosen] < e.responses.size()) {
            reply = e.responses[cursor_[*chosen]++];
        } else if (!e.responder.empty()) {
            auto it = responders_.find(e.responder);
            if (it == responders_.end()) throw LlmError(LlmErrc::BadScript, "unknown responder '" + e.responder + "'");
            responder = it->second;
            params = e.params;
        } else {
            throw LlmError(LlmErrc::MockExhausted, std::string(to_string(request.role)) + " entry '" + e.match +
                                                       "' used all " + std::to_string(e.responses.size()) +
                                                       " scripted responses");
        }
        if (!reply.latency_s && e.latency_s) reply.latency_s = e.latency_s;
    }
    if (responder) reply.text = responder(input_block(request.prompt), params, request);

    LlmResponse resp;
    resp.text = reply.text;
    resp.model = options_.model;
    resp.usage.input_tokens = estimate_tokens(request.prompt);
    resp.usage.output_tokens = estimate_tokens(reply.text);
    resp.usage.reasoning_tokens = reply.reasoning_tokens;
    resp.latency_s = reply.latency_s.value_or(options_.base_latency_s +
                                              options_.latency_per_output_token_s *
                                                  static_cast<double>(resp.usage.output_tokens));
    resp.simulated_latency = true;
    return resp;
}

std::vector<Embedding> ScriptedMock::embed(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hashed_bow_embedding(t, options_.embedding_dim));
    return out;
}

}  // namespace ctirag::llm
