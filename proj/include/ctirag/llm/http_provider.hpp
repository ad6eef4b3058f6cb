/// @file http_provider.hpp
/// @brief OpenAI-compatible chat/embeddings client.

#pragma once

#include <string>

#include "ctirag/llm/gateway.hpp"

namespace ctirag::llm {

struct HttpProviderConfig {
    std::string base_url;  // e.g. "https://api.openai.com/v1"
    std::string api_key;
    std::string model = "gpt-4o-mini";
    std::string embedding_model = "text-embedding-3-large";
    double timeout_s = 120.0;

    /// Reads base URL and key from the named environment variables; throws
    /// LlmError(ProviderError) if either is unset.
    static HttpProviderConfig from_env(const std::string& url_var = "CTIRAG_LLM_BASE_URL",
                                       const std::string& key_var = "CTIRAG_LLM_API_KEY");
};

class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);

    /// POST {base}/chat/completions. Transport failures and non-2xx
    /// statuses raise LlmError(ProviderError).
    LlmResponse complete(const LlmRequest& request) override;
    /// POST {base}/embeddings.
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    std::string model_id() const override { return config_.model; }
    std::string embedding_model_id() const override { return config_.embedding_model; }

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

    HttpProviderConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string prefix_;  // path prefix, no trailing slash
};

}  // namespace ctirag::llm
