/// @file pipelines.hpp
/// @brief The four answering architectures (RAG, GRAG, AGRAG, HRAG) and
/// few-shot pair generation.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/cypher/validator.hpp"
#include "ctirag/graph/property_graph.hpp"
#include "ctirag/llm/gateway.hpp"
#include "ctirag/llm/guardrail.hpp"
#include "ctirag/retrieval/retrieval.hpp"

namespace ctirag::pipelines {

enum class System { RAG, GRAG, AGRAG, HRAG };

const char* to_string(System s);
std::optional<System> system_from_string(std::string_view name);

struct CypherAttempt {
    std::string query;
    std::string source;  // llm, rule_fix, repair, critique
    cypher::ValidationReport report;
    std::size_t row_count = 0;
    std::string failure;  // QueryFailure name, "None" on success
    std::string error;
};

struct PipelineAnswer {
    std::string system;
    std::string answer_text;
    bool is_refusal = false;
    double latency_s = 0.0;
    int iterations = 0;
    std::vector<CypherAttempt> cypher_trace;
    nlohmann::json retrieved_context = nlohmann::json::object();
    std::size_t llm_calls = 0;
    llm::Usage usage;
    std::string error;
    bool exhausted = false;     // iteration cap reached
    bool budget_hit = false;    // wall budget stopped the loop
    /// Last executed query and its rendered table; AGRAG starts from these.
    std::string final_cypher;
    std::string final_result;
    std::string final_error;
};

nlohmann::json to_json(const PipelineAnswer& a);
PipelineAnswer answer_from_json(const nlohmann::json& j);

struct FewshotPair {
    std::string question;
    std::string cypher;
    retrieval::Embedding embedding;
};

nlohmann::json to_json(const FewshotPair& p);
FewshotPair fewshot_from_json(const nlohmann::json& j);

struct PipelineConfig {
    std::size_t rag_k = 3;
    std::size_t fewshot_k = 3;
    int grag_max_iters = 25;
    int agrag_max_iters = 6;
    std::size_t hrag_k = 5;
    double hybrid_alpha = 0.5;
    /// Per-question budget in seconds (wall + simulated); checked before
    /// every LLM call. Zero or negative disables it.
    double budget_s = 120.0;
    bool llm_guardrail = false;
    bool hrag_graph_branch = true;
    bool hrag_text_branch = true;
    std::int64_t injected_limit = 50;
    bool count_wall_time = true;  // false: latency is simulated provider time only
};

/// Strips a markdown fence and trailing semicolon from a generated query.
std::string clean_query(std::string_view text);

/// HRAG's rule-based repairs: label/relationship case normalization against
/// the ontology, AS-alias insertion for bare RETURN items and LIMIT
/// injection. String literals are left untouched.
std::string rule_based_fixes(std::string_view query, const graph::Ontology& ontology, std::int64_t limit = 50);

/// "Q: ...\nCypher: ..." blocks.
std::string render_fewshots(const std::vector<FewshotPair>& pairs);

std::vector<FewshotPair> nearest_fewshots(const retrieval::Embedding& query, const std::vector<FewshotPair>& pool,
                                          std::size_t k);

/// Asks FEWSHOT_PAIRS for `count` pairs, keeps those whose Cypher validates
/// as READ and returns rows, and embeds their questions.
std::vector<FewshotPair> generate_fewshots(const std::string& statements, const graph::PropertyGraph& graph,
                                           llm::Gateway& gateway, int count = 20);

PipelineAnswer run_rag(const std::string& question, const std::vector<retrieval::Chunk>& chunks,
                       llm::Gateway& gateway, const PipelineConfig& config = {});

PipelineAnswer run_grag(const std::string& question, const graph::PropertyGraph& graph,
                        const std::vector<FewshotPair>& fewshots, llm::Gateway& gateway,
                        const llm::Guardrail& guardrail, const PipelineConfig& config = {});

/// Latency and call counts include the GRAG run it refines; iterations are
/// AGRAG's own critique rounds.
PipelineAnswer run_agrag(const std::string& question, const graph::PropertyGraph& graph,
                         const PipelineAnswer& grag, llm::Gateway& gateway, const PipelineConfig& config = {});

PipelineAnswer run_hrag(const std::string& question, const graph::PropertyGraph& graph,
                        const std::vector<retrieval::SearchDoc>& searchdocs, llm::Gateway& gateway,
                        const llm::Guardrail& guardrail, const PipelineConfig& config = {});

}  // namespace ctirag::pipelines
