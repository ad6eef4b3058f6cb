#include "ctirag/retrieval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "ctirag/common/io.hpp"
#include "ctirag/common/text.hpp"

namespace ctirag::retrieval {

const char* to_string(RetrievalErrc code) {
    switch (code) {
        case RetrievalErrc::InvalidParams: return "InvalidParams";
        case RetrievalErrc::DimensionMismatch: return "DimensionMismatch";
        case RetrievalErrc::BadSnapshot: return "BadSnapshot";
    }
    return "RetrievalError";
}

RetrievalError::RetrievalError(RetrievalErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

const char* to_string(Channel c) {
    switch (c) {
        case Channel::Vector: return "VECTOR";
        case Channel::Keyword: return "KEYWORD";
        case Channel::Hybrid: return "HYBRID";
    }
    return "?";
}

namespace {

std::size_t sequence_length(std::string_view s, std::size_t i) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t n = 0;
    if (lead < 0x80) return 1;
    if (lead >= 0xC2 && lead <= 0xDF) n = 2;
    else if (lead >= 0xE0 && lead <= 0xEF) n = 3;
    else if (lead >= 0xF0 && lead <= 0xF4) n = 4;
    else return 1;
    if (i + n > s.size()) return 1;
    for (std::size_t j = 1; j < n; ++j) {
        if ((static_cast<unsigned char>(s[i + j]) & 0xC0) != 0x80) return 1;
    }
    return n;
}

// Byte offset of every scalar boundary, including the end.
std::vector<std::size_t> boundaries(std::string_view s) {
    std::vector<std::size_t> out;
    out.reserve(s.size() + 1);
    std::size_t i = 0;
    while (i < s.size()) {
        out.push_back(i);
        i += sequence_length(s, i);
    }
    out.push_back(s.size());
    return out;
}

void sort_hits(std::vector<RetrievalHit>& hits) {
    std::stable_sort(hits.begin(), hits.end(),
                     [](const RetrievalHit& a, const RetrievalHit& b) { return a.score > b.score; });
}

}  // namespace

std::size_t scalar_length(std::string_view utf8) { return boundaries(utf8).size() - 1; }

std::vector<Chunk> chunk_text(const std::string& doc_id, std::string_view text, std::size_t chunk_size,
                              std::size_t overlap) {
    if (chunk_size == 0 || overlap >= chunk_size) {
        std::ostringstream os;
        os << "need 0 <= overlap < chunk_size, got chunk_size=" << chunk_size << " overlap=" << overlap;
        throw RetrievalError(RetrievalErrc::InvalidParams, os.str());
    }
    std::vector<Chunk> out;
    const auto b = boundaries(text);
    const std::size_t n = b.size() - 1;
    const std::size_t stride = chunk_size - overlap;
    for (std::size_t start = 0; start < n; start += stride) {
        const std::size_t end = std::min(start + chunk_size, n);
        out.push_back(Chunk{doc_id, start, std::string(text.substr(b[start], b[end] - b[start])), std::nullopt});
        if (end == n) break;
    }
    return out;
}

std::string render_node_doc(const graph::Node& node) {
    std::ostringstream os;
    os << node.label << " " << node.name() << ":";
    std::vector<std::string> parts;
    if (const Value* s = node.property("summary"); s && !s->is_null()) parts.push_back(to_display(*s));
    for (const auto& [k, v] : node.properties) {
        if (k == "name" || k == "summary") continue;
        parts.push_back(k + ": " + to_display(v));
    }
    for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? "; " : " ") << parts[i];
    return os.str();
}

std::string render_edge_doc(const graph::Edge& edge, const graph::PropertyGraph& graph) {
    std::ostringstream os;
    os << graph.node(edge.source).name() << " " << edge.label << " " << graph.node(edge.target).name();
    if (!edge.properties.empty()) {
        os << " (";
        bool first = true;
        for (const auto& [k, v] : edge.properties) {
            os << (first ? "" : "; ") << k << ": " << to_display(v);
            first = false;
        }
        os << ")";
    }
    return os.str();
}

std::vector<std::string> keyword_terms(std::string_view text) { return text::content_tokens(text); }

std::vector<SearchDoc> build_searchdocs(const graph::PropertyGraph& graph) {
    std::vector<SearchDoc> out;
    out.reserve(graph.node_count() + graph.edge_count());
    for (const auto& n : graph.nodes()) {
        std::string t = render_node_doc(n);
        out.push_back(SearchDoc{n.id.str(), t, {}, keyword_terms(t)});
    }
    for (const auto& e : graph.edges()) {
        std::string t = render_edge_doc(e, graph);
        out.push_back(SearchDoc{e.id.str(), t, {}, keyword_terms(t)});
    }
    return out;
}

void embed_chunks(std::vector<Chunk>& chunks, const Embedder& embed) {
    if (chunks.empty()) return;
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    auto vecs = embed(texts);
    if (vecs.size() != chunks.size())
        throw RetrievalError(RetrievalErrc::DimensionMismatch, "embedder returned wrong batch size");
    for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i].embedding = std::move(vecs[i]);
}

void embed_searchdocs(std::vector<SearchDoc>& docs, const Embedder& embed) {
    if (docs.empty()) return;
    std::vector<std::string> texts;
    texts.reserve(docs.size());
    for (const auto& d : docs) texts.push_back(d.text);
    auto vecs = embed(texts);
    if (vecs.size() != docs.size())
        throw RetrievalError(RetrievalErrc::DimensionMismatch, "embedder returned wrong batch size");
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i].embedding = std::move(vecs[i]);
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) {
        std::ostringstream os;
        os << "query has dimension " << a.size() << ", index entry has " << b.size();
        throw RetrievalError(RetrievalErrc::DimensionMismatch, os.str());
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<RetrievalHit> top_k_vector(const Embedding& query, const std::vector<Embedding>& index, std::size_t k) {
    if (k == 0) throw RetrievalError(RetrievalErrc::InvalidParams, "k must be >= 1");
    std::vector<RetrievalHit> hits;
    hits.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        const double s = (cosine(query, index[i]) + 1.0) / 2.0;
        hits.push_back(RetrievalHit{i, std::to_string(i), s, Channel::Vector, s, 0.0});
    }
    sort_hits(hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<RetrievalHit> top_k_vector(const Embedding& query, const std::vector<Chunk>& chunks, std::size_t k) {
    std::vector<Embedding> index;
    index.reserve(chunks.size());
    for (const auto& c : chunks) {
        if (!c.embedding) throw RetrievalError(RetrievalErrc::DimensionMismatch, "chunk " + c.ref() + " has no embedding");
        index.push_back(*c.embedding);
    }
    auto hits = top_k_vector(query, index, k);
    for (auto& h : hits) h.ref = chunks[h.index].ref();
    return hits;
}

KeywordIndex::KeywordIndex(const std::vector<std::vector<std::string>>& docs, Bm25Params params) : params_(params) {
    std::map<std::string, std::size_t> df;
    std::size_t total = 0;
    for (const auto& d : docs) {
        std::map<std::string, std::size_t> tf;
        for (const auto& t : d) ++tf[t];
        for (const auto& [t, _] : tf) ++df[t];
        term_freqs_.emplace_back(tf.begin(), tf.end());
        lengths_.push_back(d.size());
        total += d.size();
    }
    avg_length_ = docs.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs.size());
    doc_freq_.assign(df.begin(), df.end());
}

std::size_t KeywordIndex::df(const std::string& term) const {
    auto it = std::lower_bound(doc_freq_.begin(), doc_freq_.end(), term,
                               [](const auto& p, const std::string& t) { return p.first < t; });
    return it != doc_freq_.end() && it->first == term ? it->second : 0;
}

std::vector<double> KeywordIndex::raw_scores(const std::vector<std::string>& query_terms) const {
    std::vector<std::string> q = query_terms;
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());
    const auto n = static_cast<double>(lengths_.size());
    std::vector<double> out(lengths_.size(), 0.0);
    for (const auto& term : q) {
        const auto d = static_cast<double>(df(term));
        if (d == 0) continue;
        const double idf = std::log(1.0 + (n - d + 0.5) / (d + 0.5));
        for (std::size_t i = 0; i < lengths_.size(); ++i) {
            const auto& tfs = term_freqs_[i];
            auto it = std::lower_bound(tfs.begin(), tfs.end(), term,
                                       [](const auto& p, const std::string& t) { return p.first < t; });
            if (it == tfs.end() || it->first != term) continue;
            const auto tf = static_cast<double>(it->second);
            const double norm = avg_length_ > 0 ? static_cast<double>(lengths_[i]) / avg_length_ : 0.0;
            out[i] += idf * tf * (params_.k1 + 1) / (tf + params_.k1 * (1 - params_.b + params_.b * norm));
        }
    }
    return out;
}

std::vector<double> KeywordIndex::normalized_scores(const std::vector<std::string>& query_terms) const {
    auto s = raw_scores(query_terms);
    const double top = s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
    if (top > 0)
        for (auto& x : s) x /= top;
    return s;
}

std::vector<RetrievalHit> hybrid_retrieve(std::string_view query_text, const Embedding& query_embedding,
                                          const std::vector<SearchDoc>& docs, std::size_t k, double alpha) {
    if (k == 0) throw RetrievalError(RetrievalErrc::InvalidParams, "k must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw RetrievalError(RetrievalErrc::InvalidParams, "alpha must lie in [0,1]");
    std::vector<std::vector<std::string>> kw;
    kw.reserve(docs.size());
    for (const auto& d : docs) kw.push_back(d.keywords);
    const auto keyword = KeywordIndex(kw).normalized_scores(keyword_terms(query_text));
    std::vector<RetrievalHit> hits;
    hits.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const double v = (cosine(query_embedding, docs[i].embedding) + 1.0) / 2.0;
        hits.push_back(RetrievalHit{i, docs[i].element_ref, alpha * v + (1 - alpha) * keyword[i], Channel::Hybrid, v,
                                    keyword[i]});
    }
    sort_hits(hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

nlohmann::json to_json(const Chunk& c) {
    nlohmann::json j{{"type", "chunk"}, {"doc_id", c.doc_id}, {"start_offset", c.start_offset}, {"text", c.text}};
    j["embedding"] = c.embedding ? nlohmann::json(*c.embedding) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const SearchDoc& d) {
    return {{"type", "searchdoc"}, {"element_ref", d.element_ref}, {"text", d.text},
            {"keywords", d.keywords},   {"embedding", d.embedding}};
}

std::string snapshot_jsonl(const IndexSnapshot& snap) {
    std::vector<nlohmann::json> rows;
    for (const auto& c : snap.chunks) rows.push_back(to_json(c));
    for (const auto& d : snap.searchdocs) rows.push_back(to_json(d));
    return io::to_jsonl(rows);
}

IndexSnapshot parse_snapshot_jsonl(std::string_view text) {
    IndexSnapshot snap;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(text)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (type == "chunk") {
                Chunk c{j.at("doc_id").get<std::string>(), j.at("start_offset").get<std::size_t>(),
                        j.at("text").get<std::string>(), std::nullopt};
                if (!j.at("embedding").is_null()) c.embedding = j.at("embedding").get<Embedding>();
                snap.chunks.push_back(std::move(c));
            } else if (type == "searchdoc") {
                snap.searchdocs.push_back(SearchDoc{j.at("element_ref").get<std::string>(), j.at("text").get<std::string>(),
                                                    j.at("embedding").get<Embedding>(),
                                                    j.at("keywords").get<std::vector<std::string>>()});
            } else {
                throw RetrievalError(RetrievalErrc::BadSnapshot, "unknown record type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw RetrievalError(RetrievalErrc::BadSnapshot, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return snap;
}

void save_snapshot(const std::filesystem::path& path, const IndexSnapshot& snap) {
    io::write_file_atomic(path, snapshot_jsonl(snap));
}

IndexSnapshot load_snapshot(const std::filesystem::path& path) { return parse_snapshot_jsonl(io::read_file(path)); }

}  // namespace ctirag::retrieval
