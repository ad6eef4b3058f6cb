/// @file qa_factory.hpp
/// @brief Evaluation-set generation from executed Cypher and external
/// reports, plus dataset quality metrics.

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/graph/property_graph.hpp"
#include "ctirag/llm/gateway.hpp"

namespace ctirag::qa {

enum class Category { Simple, SingleHop, MultiHop, Guided, Unanswerable };

/// SIMPLE, SINGLE_HOP, MULTI_HOP, GUIDED, UNANSWERABLE.
const char* to_string(Category c);
std::optional<Category> category_from_string(std::string_view name);
const std::vector<Category>& all_categories();

enum class QaErrc { GenerationUnderflow, BadDataset };

const char* to_string(QaErrc code);

class QaError : public std::runtime_error {
public:
    QaError(QaErrc code, const std::string& what);
    QaErrc code() const { return code_; }

private:
    QaErrc code_;
};

struct QAItem {
    std::string id;
    std::string question;
    std::string gold_answer;
    Category category = Category::Simple;
    std::string provenance;  // verification Cypher, or "guided:<doc id>"
    bool is_aggregate = false;
    bool multi_hop = false;
};

nlohmann::json to_json(const QAItem& item);
QAItem item_from_json(const nlohmann::json& j);

inline constexpr const char* kDatasetFormat = "ctirag-qa/1";

/// Header line `{"format":"ctirag-qa/1"}` then one item per line.
std::string dataset_jsonl(const std::vector<QAItem>& items);
std::vector<QAItem> parse_dataset_jsonl(std::string_view text);

struct Quota {
    int simple = 15;
    int single_hop = 15;
    int multi_hop = 15;
    int unanswerable = 5;
    int guided = 16;
    int guided_multi_hop = 8;
    int min_aggregates = 5;
    int max_reasks = 3;
    std::size_t max_gold_words = 12;
};

struct Rejection {
    std::string category;
    std::string question;
    std::string reason;
};

struct GenerationLog {
    std::vector<Rejection> rejections;
    std::map<std::string, int> asks;
};

/// "simple-01", "multi-hop-07", ...
std::string item_id(Category c, std::size_t index);

/// True when the Cypher text aggregates with count() or collect().
bool is_aggregate_query(std::string_view cypher);

/// Asks QA_FROM_CYPHER per category until the quota is met, re-asking up to
/// `max_reasks` times with rejection feedback. Answerable golds are the
/// rendered result of executing the item's query; UNANSWERABLE items must
/// run empty and get an empty gold.
std::vector<QAItem> generate_from_cypher(const std::string& statements, const graph::PropertyGraph& graph,
                                         llm::Gateway& gateway, const Quota& quota = {},
                                         GenerationLog* log = nullptr);

/// GUIDED items from one external report; each must name a graph entity.
std::vector<QAItem> generate_guided(const std::string& document_id, const std::string& document,
                                    const graph::PropertyGraph& graph, llm::Gateway& gateway,
                                    const std::vector<std::string>& avoid = {}, const Quota& quota = {},
                                    GenerationLog* log = nullptr);

struct DatasetReport {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    double prefix_diversity = 0;
    double factoid_within_12w = 0;
    std::map<std::string, double> mean_answer_words;
    std::map<std::string, double> median_answer_words;
    double factoid_median_words = 0;
    std::size_t aggregate_multihop_count = 0;
};

/// Factoid = SIMPLE, SINGLE_HOP and MULTI_HOP. Prefixes are the first four
/// normalized tokens.
DatasetReport validate_dataset(const std::vector<QAItem>& items, std::size_t max_gold_words = 12);

nlohmann::json to_json(const DatasetReport& r);

}  // namespace ctirag::qa
