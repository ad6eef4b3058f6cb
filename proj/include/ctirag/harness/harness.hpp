/// @file harness.hpp
/// @brief Experiment orchestration: configuration, corpus sampling, ingestion
/// with execute-or-repair, and the file-based stages that make up a run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/analysis/analysis.hpp"
#include "ctirag/graph/property_graph.hpp"
#include "ctirag/llm/gateway.hpp"
#include "ctirag/pipelines/pipelines.hpp"

namespace ctirag::harness {

enum class HarnessErrc { Config, Corpus, Ingest, MissingArtifact };

const char* to_string(HarnessErrc code);

class HarnessError : public std::runtime_error {
public:
    HarnessError(HarnessErrc code, const std::string& what);
    HarnessErrc code() const { return code_; }

private:
    HarnessErrc code_;
};

struct ProviderConfig {
    std::string kind = "mock";  // mock | http
    std::filesystem::path script;
    std::string base_url_env = "CTIRAG_LLM_BASE_URL";
    std::string api_key_env = "CTIRAG_LLM_API_KEY";
    std::string model;
    std::string embedding_model;
    double timeout_s = 120.0;
};

struct RunConfig {
    std::filesystem::path corpus;
    int reports_per_run = 15;
    int runs = 10;
    std::uint64_t seed = 0;
    ProviderConfig provider;
    int grag_max_iters = 25;
    int agrag_max_iters = 6;
    int ingest_max_attempts = 25;
    int fewshot_count = 20;
    std::size_t chunk_size = 200;
    std::size_t chunk_overlap = 20;
    std::size_t rag_k = 3;
    std::size_t hrag_k = 5;
    double budget_s = 120.0;
    bool llm_guardrail = false;
    std::size_t bootstrap_resamples = 10000;
    std::filesystem::path cost_table;
    bool parallel = false;

    /// Throws HarnessError(Config) naming the first bad field.
    void validate() const;
    pipelines::PipelineConfig pipeline() const;
};

/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);

analysis::CostModel cost_model_from_json(const nlohmann::json& j);

struct Document {
    std::string id;
    std::string text;
};

/// `<root>/reports/*.txt` and optional `<root>/external/*.txt`, sorted by id.
struct Corpus {
    std::vector<Document> reports;
    std::vector<Document> external;
};

Corpus load_corpus(const std::filesystem::path& root);

/// Named sub-seed derived from the experiment seed.
std::uint64_t sub_seed(std::uint64_t seed, std::string_view name);

/// Indices of `k` distinct reports out of `n` (k capped at n), sorted.
std::vector<std::size_t> sample_reports(std::size_t n, std::size_t k, std::uint64_t seed);

/// A fresh provider. Mock scripts get their builtin responders.
std::shared_ptr<llm::Provider> make_provider(const ProviderConfig& config);

struct IngestLog {
    std::string document_id;
    int attempts = 0;
    bool accepted = false;
    std::vector<std::string> errors;
};

struct IngestResult {
    graph::PropertyGraph graph;
    std::string statements;  // accepted replies, one document per block
    std::vector<IngestLog> logs;
};

/// Each document's reply is parsed, validated as WRITE and executed on a copy
/// of the graph; only a fully successful reply is committed. Failures are fed
/// back for up to `max_attempts` asks. The returned graph is frozen.
IngestResult ingest(const std::vector<Document>& documents, llm::Gateway& gateway, int max_attempts = 25);

nlohmann::json to_json(const IngestLog& log);

std::filesystem::path run_dir(const std::filesystem::path& experiment_dir, int run);

/// Stages read and write files under `run_dir(experiment_dir, run)`:
/// manifest.json, graph.json, statements.cypher, fewshots.jsonl,
/// dataset.jsonl, index.jsonl, answers.jsonl, scores.jsonl.
void stage_ingest(const RunConfig& config, const Corpus& corpus, const std::filesystem::path& experiment_dir, int run,
                  llm::Gateway& gateway);
void stage_gen_qa(const RunConfig& config, const Corpus& corpus, const std::filesystem::path& experiment_dir, int run,
                  llm::Gateway& gateway);
void stage_answer(const RunConfig& config, const Corpus& corpus, const std::filesystem::path& experiment_dir, int run,
                  llm::Gateway& gateway, std::optional<pipelines::System> only = std::nullopt);
void stage_score(const RunConfig& config, const std::filesystem::path& experiment_dir, int run, llm::Gateway& gateway);

/// Builds the analysis report from score and dataset files. Offline.
nlohmann::json analyze_files(const RunConfig& config, const std::vector<std::filesystem::path>& score_files,
                             const std::vector<std::filesystem::path>& dataset_files, const nlohmann::json& models = {});

/// Runs listed in the experiment directory whose manifest says "ok".
std::vector<int> completed_runs(const std::filesystem::path& experiment_dir);

nlohmann::json stage_analyze(const RunConfig& config, const std::filesystem::path& experiment_dir);

/// report.json plus one CSV per table under `<dir>/tables`.
void write_report(const nlohmann::json& report, const std::filesystem::path& dir);

struct RunStatus {
    int run = 0;
    bool ok = false;
    std::string error;
};

struct ExperimentResult {
    std::vector<RunStatus> runs;
    int exit_code = 0;  // 0 all ok, 2 partial
};

/// Validates the config and corpus before touching `experiment_dir`.
ExperimentResult run_experiment(const RunConfig& config, const std::filesystem::path& experiment_dir);

}  // namespace ctirag::harness
