#include "ctirag/llm/http_provider.hpp"

#include <chrono>
#include <cstdlib>
#include <regex>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace ctirag::llm {

HttpProviderConfig HttpProviderConfig::from_env(const std::string& url_var, const std::string& key_var) {
    HttpProviderConfig c;
    const char* url = std::getenv(url_var.c_str());
    const char* key = std::getenv(key_var.c_str());
    if (!url || !*url) throw LlmError(LlmErrc::ProviderError, "environment variable " + url_var + " is not set");
    if (!key || !*key) throw LlmError(LlmErrc::ProviderError, "environment variable " + key_var + " is not set");
    c.base_url = url;
    c.api_key = key;
    return c;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.base_url, m, re))
        throw LlmError(LlmErrc::ProviderError, "malformed base URL '" + config_.base_url + "'");
    origin_ = m[1].str();
    prefix_ = m[2].matched ? m[2].str() : "";
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

nlohmann::json HttpProvider::post(const std::string& path, const nlohmann::json& body) const {
    httplib::Client cli(origin_);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
    auto res = cli.Post(prefix_ + path, headers, body.dump(), "application/json");
    if (!res) throw LlmError(LlmErrc::ProviderError, "request to " + origin_ + prefix_ + path + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw LlmError(LlmErrc::ProviderError,
                       "HTTP " + std::to_string(res->status) + " from " + prefix_ + path + ": " + res->body.substr(0, 300));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw LlmError(LlmErrc::ProviderError, "response body is not JSON");
    return j;
}

LlmResponse HttpProvider::complete(const LlmRequest& request) {
    nlohmann::json body{{"model", request.model.empty() ? config_.model : request.model},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
                        {"temperature", request.temperature},
                        {"max_tokens", request.max_tokens}};
    const auto t0 = std::chrono::steady_clock::now();
    auto j = post("/chat/completions", body);
    LlmResponse out;
    out.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        out.model = j.value("model", config_.model);
        if (j.contains("usage")) {
            const auto& u = j.at("usage");
            out.usage.input_tokens = u.value("prompt_tokens", std::int64_t{0});
            out.usage.output_tokens = u.value("completion_tokens", std::int64_t{0});
            if (u.contains("completion_tokens_details") && u["completion_tokens_details"].is_object())
                out.usage.reasoning_tokens = u["completion_tokens_details"].value("reasoning_tokens", std::int64_t{0});
        }
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(LlmErrc::ProviderError, std::string("unexpected completion payload: ") + e.what());
    }
    return out;
}

std::vector<Embedding> HttpProvider::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    auto j = post("/embeddings", {{"model", config_.embedding_model}, {"input", texts}});
    std::vector<Embedding> out(texts.size());
    try {
        for (const auto& item : j.at("data")) {
            const auto idx = item.at("index").get<std::size_t>();
            if (idx >= out.size()) throw LlmError(LlmErrc::ProviderError, "embedding index out of range");
            out[idx] = item.at("embedding").get<Embedding>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(LlmErrc::ProviderError, std::string("unexpected embeddings payload: ") + e.what());
    }
    return out;
}

}  // namespace ctirag::llm
