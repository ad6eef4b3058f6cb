/// @file retrieval.hpp
/// @brief Chunking, exhaustive vector search, graph SearchDocs, BM25 keyword
/// scoring and hybrid fusion.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/graph/property_graph.hpp"

namespace ctirag::retrieval {

using Embedding = std::vector<double>;

/// Batch embedding function, normally bound to an llm::Gateway.
using Embedder = std::function<std::vector<Embedding>(const std::vector<std::string>&)>;

enum class RetrievalErrc { InvalidParams, DimensionMismatch, BadSnapshot };

const char* to_string(RetrievalErrc code);

class RetrievalError : public std::runtime_error {
public:
    RetrievalError(RetrievalErrc code, const std::string& what);
    RetrievalErrc code() const { return code_; }

private:
    RetrievalErrc code_;
};

struct Chunk {
    std::string doc_id;
    std::size_t start_offset = 0;  // Unicode scalar values
    std::string text;
    std::optional<Embedding> embedding;

    std::string ref() const { return doc_id + "#" + std::to_string(start_offset); }
};

/// Number of Unicode scalar values in a UTF-8 string. Bytes that do not form
/// a valid sequence count as one scalar each.
std::size_t scalar_length(std::string_view utf8);

/// Windows of `chunk_size` scalars starting every `chunk_size - overlap`
/// scalars. The last window may be shorter; no window starts inside the
/// previous window's tail once the text is exhausted.
std::vector<Chunk> chunk_text(const std::string& doc_id, std::string_view text, std::size_t chunk_size = 200,
                              std::size_t overlap = 20);

struct SearchDoc {
    std::string element_ref;  // "n<k>" or "e<k>"
    std::string text;
    Embedding embedding;
    std::vector<std::string> keywords;
};

/// One SearchDoc per node then one per edge, in id order. Embeddings are
/// left empty; see embed_searchdocs.
std::vector<SearchDoc> build_searchdocs(const graph::PropertyGraph& graph);

std::string render_node_doc(const graph::Node& node);
std::string render_edge_doc(const graph::Edge& edge, const graph::PropertyGraph& graph);

void embed_chunks(std::vector<Chunk>& chunks, const Embedder& embed);
void embed_searchdocs(std::vector<SearchDoc>& docs, const Embedder& embed);

enum class Channel { Vector, Keyword, Hybrid };

const char* to_string(Channel c);

struct RetrievalHit {
    std::size_t index = 0;  // position in the searched collection
    std::string ref;
    double score = 0.0;
    Channel channel = Channel::Vector;
    double vector_score = 0.0;
    double keyword_score = 0.0;
};

double cosine(const Embedding& a, const Embedding& b);

/// Exhaustive ranking by (cos+1)/2; ties keep collection order.
std::vector<RetrievalHit> top_k_vector(const Embedding& query, const std::vector<Embedding>& index,
                                       std::size_t k = 3);

/// Convenience over chunks; chunks without embeddings are a DimensionMismatch.
std::vector<RetrievalHit> top_k_vector(const Embedding& query, const std::vector<Chunk>& chunks, std::size_t k = 3);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 over pre-tokenized documents, scores divided by the best
/// document's score so the top document gets 1 (all zeros if nothing matches).
class KeywordIndex {
public:
    explicit KeywordIndex(const std::vector<std::vector<std::string>>& docs, Bm25Params params = {});

    std::vector<double> normalized_scores(const std::vector<std::string>& query_terms) const;
    std::vector<double> raw_scores(const std::vector<std::string>& query_terms) const;
    std::size_t size() const { return lengths_.size(); }

private:
    Bm25Params params_;
    std::vector<std::size_t> lengths_;
    double avg_length_ = 0.0;
    std::vector<std::vector<std::pair<std::string, std::size_t>>> term_freqs_;
    std::vector<std::pair<std::string, std::size_t>> doc_freq_;  // sorted by term

    std::size_t df(const std::string& term) const;
};

/// Query tokenization shared by the keyword channel: normalized content tokens.
std::vector<std::string> keyword_terms(std::string_view text);

/// score = alpha * (cos+1)/2 + (1-alpha) * normalized BM25.
std::vector<RetrievalHit> hybrid_retrieve(std::string_view query_text, const Embedding& query_embedding,
                                          const std::vector<SearchDoc>& docs, std::size_t k, double alpha = 0.5);

struct IndexSnapshot {
    std::vector<Chunk> chunks;
    std::vector<SearchDoc> searchdocs;
};

nlohmann::json to_json(const Chunk& c);
nlohmann::json to_json(const SearchDoc& d);
std::string snapshot_jsonl(const IndexSnapshot& snap);
IndexSnapshot parse_snapshot_jsonl(std::string_view text);
void save_snapshot(const std::filesystem::path& path, const IndexSnapshot& snap);
IndexSnapshot load_snapshot(const std::filesystem::path& path);

}  // namespace ctirag::retrieval
