#include "ctirag/pipelines/pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <regex>
#include <set>
#include <sstream>

#include "ctirag/common/text.hpp"
#include "ctirag/cypher/executor.hpp"

namespace ctirag::pipelines {

using nlohmann::json;

namespace {

/// Wraps the gateway for one pipeline run: counts calls, sums usage and
/// keeps the run's clock (wall time plus simulated provider latency).
class Meter {
public:
    Meter(llm::Gateway& gw, const PipelineConfig& cfg, double offset_s = 0.0)
        : gw_(gw), cfg_(cfg), offset_(offset_s), start_(std::chrono::steady_clock::now()) {}

    double wall() const {
        if (!cfg_.count_wall_time) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    double simulated() const { return simulated_; }
    double elapsed() const { return offset_ + wall() + simulated_; }
    bool over_budget() const { return cfg_.budget_s > 0 && elapsed() >= cfg_.budget_s; }

    llm::LlmResponse complete(llm::PromptRole role, const llm::Slots& slots) {
        ++calls;
        auto r = gw_.complete(role, slots);
        usage += r.usage;
        if (r.simulated_latency) simulated_ += r.latency_s;
        return r;
    }

    json complete_json(llm::PromptRole role, llm::Slots slots) {
        std::string err;
        auto first = complete(role, slots);
        if (auto j = llm::parse_strict_json(first.text, &err)) return *j;
        slots["feedback"] = (slots.count("feedback") ? slots["feedback"] + "\n" : std::string()) +
                            "Your previous reply was not valid JSON (" + err + "). Reply with JSON only.";
        auto second = complete(role, slots);
        if (auto j = llm::parse_strict_json(second.text, &err)) return *j;
        throw llm::LlmError(llm::LlmErrc::JsonParse, std::string(llm::to_string(role)) + " reply is not JSON: " + err);
    }

    void finish(PipelineAnswer& a) const {
        a.llm_calls += calls;
        a.usage += usage;
        a.latency_s = elapsed();
    }

    std::size_t calls = 0;
    llm::Usage usage;

private:
    llm::Gateway& gw_;
    const PipelineConfig& cfg_;
    double offset_;
    double simulated_ = 0.0;
    std::chrono::steady_clock::time_point start_;
};

void set_refusal(PipelineAnswer& a) {
    a.is_refusal = true;
    a.answer_text = llm::kRefusalPhrase;
}

void apply_answer(PipelineAnswer& a, const std::string& text) {
    if (llm::is_refusal_text(text)) {
        set_refusal(a);
    } else {
        a.answer_text = text::trim(text);
        a.is_refusal = false;
    }
}

CypherAttempt record(const cypher::QueryOutcome& o, const std::string& source) {
    CypherAttempt c;
    c.query = o.text;
    c.source = source;
    c.report = o.report;
    c.row_count = o.table.rows.size();
    c.failure = cypher::to_string(o.failure);
    c.error = o.error;
    return c;
}

void note_final(PipelineAnswer& a, const cypher::QueryOutcome& o, const graph::PropertyGraph& g) {
    a.final_cypher = o.text;
    a.final_error = o.error;
    a.final_result = o.failure == cypher::QueryFailure::None || o.failure == cypher::QueryFailure::Empty
                         ? (cypher::empty_result(o.table) ? std::string() : cypher::render_table(o.table, g))
                         : std::string();
}

bool guardrail_rejects(const std::string& question, const llm::Guardrail& guardrail, Meter& meter,
                       const PipelineConfig& cfg) {
    if (guardrail.check(question) == llm::GuardrailVerdict::Reject) return true;
    if (!cfg.llm_guardrail) return false;
    auto r = meter.complete(llm::PromptRole::Guardrail, {{"question", question}});
    return text::to_lower(r.text).find("reject") != std::string::npos;
}

std::string attempt_line(int n, const cypher::QueryOutcome& o) {
    return "Attempt " + std::to_string(n) + ": query `" + o.text + "` failed: " + o.error + "\n";
}

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Calls fn(begin, end) for every maximal run of text outside string literals.
template <typename Fn>
std::string map_unquoted(std::string_view q, Fn fn) {
    std::string out;
    std::size_t i = 0;
    while (i < q.size()) {
        if (q[i] == '\'' || q[i] == '"') {
            const char quote = q[i];
            std::size_t j = i + 1;
            while (j < q.size() && q[j] != quote) j += q[j] == '\\' ? 2 : 1;
            j = std::min(j + 1, q.size());
            out.append(q.substr(i, j - i));
            i = j;
            continue;
        }
        std::size_t j = i;
        while (j < q.size() && q[j] != '\'' && q[j] != '"') ++j;
        out += fn(std::string(q.substr(i, j - i)));
        i = j;
    }
    return out;
}

std::string fix_label_case(std::string_view q, const graph::Ontology& onto) {
    return map_unquoted(q, [&](const std::string& seg) {
        std::string out;
        std::size_t i = 0;
        while (i < seg.size()) {
            if (seg[i] != ':') {
                out += seg[i++];
                continue;
            }
            out += seg[i++];
            std::size_t j = i;
            while (j < seg.size() && ident_char(seg[j])) ++j;
            const std::string id = seg.substr(i, j - i);
            std::string fixed = id;
            if (!id.empty() && !onto.is_entity_type(id) && !onto.is_relationship_type(id)) {
                if (auto e = onto.canonical_entity_type(id))
                    fixed = *e;
                else if (auto r = onto.canonical_relationship_type(id))
                    fixed = *r;
            }
            out += fixed;
            i = j;
        }
        return out;
    });
}

/// Top-level keyword position (outside quotes and brackets), case-insensitive.
std::size_t find_keyword(const std::string& q, const std::string& kw, std::size_t from = 0) {
    int depth = 0;
    char quote = 0;
    const std::string lq = text::to_lower(q);
    for (std::size_t i = from; i < q.size(); ++i) {
        const char c = q[i];
        if (quote) {
            if (c == '\\') ++i;
            else if (c == quote) quote = 0;
            continue;
        }
        if (c == '\'' || c == '"') quote = c;
        else if (c == '(' || c == '[' || c == '{') ++depth;
        else if (c == ')' || c == ']' || c == '}') --depth;
        else if (depth == 0 && lq.compare(i, kw.size(), kw) == 0 && (i == 0 || !ident_char(q[i - 1])) &&
                 (i + kw.size() >= q.size() || !ident_char(q[i + kw.size()])))
            return i;
    }
    return std::string::npos;
}

std::vector<std::string> split_top_level(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    char quote = 0;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            cur += c;
            if (c == '\\' && i + 1 < s.size()) cur += s[++i];
            else if (c == quote) quote = 0;
            continue;
        }
        if (c == '\'' || c == '"') quote = c;
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        if (c == ',' && depth == 0) {
            out.push_back(text::trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!text::trim(cur).empty()) out.push_back(text::trim(cur));
    return out;
}

std::string derive_alias(const std::string& expr, std::size_t index) {
    static const std::regex kProp(R"(^[A-Za-z_][A-Za-z0-9_]*\.([A-Za-z_][A-Za-z0-9_]*)$)");
    static const std::regex kFunc(R"(^([A-Za-z_][A-Za-z0-9_]*)\s*\()");
    static const std::regex kVar(R"(^[A-Za-z_][A-Za-z0-9_]*$)");
    std::smatch m;
    if (std::regex_match(expr, m, kProp)) return m[1].str();
    if (std::regex_search(expr, m, kFunc)) return text::to_lower(m[1].str());
    if (std::regex_match(expr, kVar)) return expr;
    return "col" + std::to_string(index + 1);
}

std::string insert_aliases(const std::string& q) {
    std::size_t ret = std::string::npos;
    for (std::size_t p = find_keyword(q, "return"); p != std::string::npos; p = find_keyword(q, "return", p + 6))
        ret = p;
    if (ret == std::string::npos) return q;
    std::size_t body = ret + 6;
    std::size_t end = q.size();
    for (const char* kw : {"order", "skip", "limit"}) end = std::min(end, find_keyword(q, kw, body));
    std::string items = q.substr(body, end - body);
    std::string prefix;
    const std::string trimmed = text::trim(items);
    if (text::starts_with_ci(trimmed, "distinct ")) {
        prefix = "DISTINCT ";
        items = trimmed.substr(9);
    }
    static const std::regex kAs(R"(\s+[Aa][Ss]\s+[A-Za-z_][A-Za-z0-9_]*$)");
    auto parts = split_top_level(items);
    std::set<std::string> used;
    for (const auto& p : parts) {
        std::smatch m;
        if (std::regex_search(p, m, kAs)) used.insert(text::trim(m[0].str().substr(m[0].str().rfind(' ') + 1)));
    }
    bool changed = false;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i] == "*" || std::regex_search(parts[i], kAs)) continue;
        std::string alias = derive_alias(parts[i], i);
        std::string base = alias;
        for (int n = 2; used.count(alias); ++n) alias = base + "_" + std::to_string(n);
        used.insert(alias);
        parts[i] += " AS " + alias;
        changed = true;
    }
    if (!changed) return q;
    std::string joined;
    for (std::size_t i = 0; i < parts.size(); ++i) joined += (i ? ", " : "") + parts[i];
    std::string tail = q.substr(end);
    return q.substr(0, body) + " " + prefix + joined + (tail.empty() ? "" : " " + text::trim(tail));
}

std::string inject_limit(const std::string& q, std::int64_t limit) {
    if (limit <= 0 || find_keyword(q, "limit") != std::string::npos) return q;
    return text::trim(q) + " LIMIT " + std::to_string(limit);
}

json report_json(const cypher::ValidationReport& r) { return cypher::to_json(r); }

cypher::ValidationReport report_from_json(const json& j) {
    cypher::ValidationReport r;
    r.syntactic_ok = j.value("syntactic_ok", true);
    r.readonly_ok = j.value("readonly_ok", true);
    r.schema_ok = j.value("schema_ok", true);
    for (const auto& v : j.value("violations", json::array()))
        r.violations.push_back({v.value("kind", ""), v.value("message", ""), v.value("span", "")});
    return r;
}

}  // namespace

const char* to_string(System s) {
    switch (s) {
        case System::RAG: return "RAG";
        case System::GRAG: return "GRAG";
        case System::AGRAG: return "AGRAG";
        case System::HRAG: return "HRAG";
    }
    return "?";
}

std::optional<System> system_from_string(std::string_view name) {
    for (auto s : {System::RAG, System::GRAG, System::AGRAG, System::HRAG})
        if (text::to_lower(name) == text::to_lower(to_string(s))) return s;
    return std::nullopt;
}

json to_json(const PipelineAnswer& a) {
    json trace = json::array();
    for (const auto& c : a.cypher_trace)
        trace.push_back({{"query", c.query},
                         {"source", c.source},
                         {"report", report_json(c.report)},
                         {"row_count", c.row_count},
                         {"failure", c.failure},
                         {"error", c.error}});
    return {{"system", a.system},
            {"answer", a.answer_text},
            {"is_refusal", a.is_refusal},
            {"latency_s", a.latency_s},
            {"iterations", a.iterations},
            {"cypher_trace", trace},
            {"retrieved_context", a.retrieved_context},
            {"llm_calls", a.llm_calls},
            {"tokens",
             {{"input", a.usage.input_tokens},
              {"output", a.usage.output_tokens},
              {"reasoning", a.usage.reasoning_tokens}}},
            {"error", a.error},
            {"exhausted", a.exhausted},
            {"budget_hit", a.budget_hit},
            {"final_cypher", a.final_cypher},
            {"final_result", a.final_result},
            {"final_error", a.final_error}};
}

PipelineAnswer answer_from_json(const json& j) {
    PipelineAnswer a;
    a.system = j.at("system").get<std::string>();
    a.answer_text = j.value("answer", "");
    a.is_refusal = j.value("is_refusal", false);
    a.latency_s = j.value("latency_s", 0.0);
    a.iterations = j.value("iterations", 0);
    for (const auto& c : j.value("cypher_trace", json::array())) {
        CypherAttempt t;
        t.query = c.value("query", "");
        t.source = c.value("source", "");
        t.report = report_from_json(c.value("report", json::object()));
        t.row_count = c.value("row_count", std::size_t{0});
        t.failure = c.value("failure", "");
        t.error = c.value("error", "");
        a.cypher_trace.push_back(std::move(t));
    }
    a.retrieved_context = j.value("retrieved_context", json::object());
    a.llm_calls = j.value("llm_calls", std::size_t{0});
    const auto tok = j.value("tokens", json::object());
    a.usage.input_tokens = tok.value("input", std::int64_t{0});
    a.usage.output_tokens = tok.value("output", std::int64_t{0});
    a.usage.reasoning_tokens = tok.value("reasoning", std::int64_t{0});
    a.error = j.value("error", "");
    a.exhausted = j.value("exhausted", false);
    a.budget_hit = j.value("budget_hit", false);
    a.final_cypher = j.value("final_cypher", "");
    a.final_result = j.value("final_result", "");
    a.final_error = j.value("final_error", "");
    return a;
}

json to_json(const FewshotPair& p) {
    return {{"question", p.question}, {"cypher", p.cypher}, {"embedding", p.embedding}};
}

FewshotPair fewshot_from_json(const json& j) {
    return {j.at("question").get<std::string>(), j.at("cypher").get<std::string>(),
            j.value("embedding", retrieval::Embedding{})};
}

std::string clean_query(std::string_view raw) {
    std::string t = text::trim(raw);
    if (t.rfind("```", 0) == 0) {
        auto nl = t.find('\n');
        t = nl == std::string::npos ? std::string() : t.substr(nl + 1);
        auto close = t.rfind("```");
        if (close != std::string::npos) t = t.substr(0, close);
        t = text::trim(t);
    }
    while (!t.empty() && t.back() == ';') t = text::trim(t.substr(0, t.size() - 1));
    return t;
}

std::string rule_based_fixes(std::string_view query, const graph::Ontology& ontology, std::int64_t limit) {
    std::string q = fix_label_case(clean_query(query), ontology);
    q = insert_aliases(q);
    return inject_limit(q, limit);
}

std::string render_fewshots(const std::vector<FewshotPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) out += "Q: " + p.question + "\nCypher: " + p.cypher + "\n";
    return out.empty() ? "(none)" : out;
}

std::vector<FewshotPair> nearest_fewshots(const retrieval::Embedding& query, const std::vector<FewshotPair>& pool,
                                          std::size_t k) {
    std::vector<retrieval::Embedding> index;
    for (const auto& p : pool) index.push_back(p.embedding);
    std::vector<FewshotPair> out;
    if (pool.empty()) return out;
    for (const auto& h : retrieval::top_k_vector(query, index, k)) out.push_back(pool[h.index]);
    return out;
}

std::vector<FewshotPair> generate_fewshots(const std::string& statements, const graph::PropertyGraph& graph,
                                           llm::Gateway& gateway, int count) {
    const json reply = gateway.complete_json(llm::PromptRole::FewshotPairs,
                                             {{"statements", statements},
                                              {"ontology", graph.ontology().describe()},
                                              {"count", std::to_string(count)},
                                              {"feedback", ""}});
    std::vector<FewshotPair> out;
    std::set<std::string> seen;
    for (const auto& p : reply.value("pairs", json::array())) {
        if (!p.is_object()) continue;
        FewshotPair f{text::trim(p.value("question", "")), clean_query(p.value("cypher", "")), {}};
        if (f.question.empty() || !seen.insert(text::to_lower(f.question)).second) continue;
        if (!cypher::run_read_query(f.cypher, graph, true).succeeded()) continue;
        out.push_back(std::move(f));
    }
    std::vector<std::string> qs;
    for (const auto& f : out) qs.push_back(f.question);
    if (!qs.empty()) {
        auto embs = gateway.embed(qs);
        for (std::size_t i = 0; i < out.size(); ++i) out[i].embedding = std::move(embs[i]);
    }
    return out;
}

PipelineAnswer run_rag(const std::string& question, const std::vector<retrieval::Chunk>& chunks,
                       llm::Gateway& gateway, const PipelineConfig& config) {
    PipelineAnswer a;
    a.system = "RAG";
    Meter meter(gateway, config);
    try {
        std::string context;
        json hits = json::array();
        if (!chunks.empty()) {
            const auto q = gateway.embed({question}).at(0);
            for (const auto& h : retrieval::top_k_vector(q, chunks, config.rag_k)) {
                const auto& c = chunks[h.index];
                hits.push_back({{"ref", c.ref()}, {"score", h.score}, {"text", c.text}});
                context += "[" + c.ref() + "] " + c.text + "\n";
            }
        }
        a.retrieved_context = {{"chunks", hits}};
        auto r = meter.complete(llm::PromptRole::AnswerRag, {{"question", question}, {"context", context}});
        apply_answer(a, r.text);
    } catch (const std::exception& e) {
        a.error = e.what();
    }
    a.iterations = 1;
    meter.finish(a);
    return a;
}

PipelineAnswer run_grag(const std::string& question, const graph::PropertyGraph& graph,
                        const std::vector<FewshotPair>& fewshots, llm::Gateway& gateway,
                        const llm::Guardrail& guardrail, const PipelineConfig& config) {
    PipelineAnswer a;
    a.system = "GRAG";
    Meter meter(gateway, config);
    try {
        if (guardrail_rejects(question, guardrail, meter, config)) {
            set_refusal(a);
            a.error = "guardrail rejected the question";
            meter.finish(a);
            return a;
        }
        std::vector<FewshotPair> shots;
        if (!fewshots.empty()) shots = nearest_fewshots(gateway.embed({question}).at(0), fewshots, config.fewshot_k);
        json ctx = json::array();
        for (const auto& s : shots) ctx.push_back({{"question", s.question}, {"cypher", s.cypher}});
        a.retrieved_context = {{"fewshots", ctx}};
        const std::string shot_text = render_fewshots(shots);
        const std::string onto = graph.ontology().describe();
        std::string feedback;
        bool done = false;
        for (int it = 1; it <= config.grag_max_iters; ++it) {
            if (meter.over_budget()) {
                a.budget_hit = true;
                break;
            }
            auto r = meter.complete(llm::PromptRole::GenCypher, {{"question", question},
                                                                 {"ontology", onto},
                                                                 {"fewshots", shot_text},
                                                                 {"feedback", feedback}});
            auto o = cypher::run_read_query(clean_query(r.text), graph, true);
            a.iterations = it;
            a.cypher_trace.push_back(record(o, "llm"));
            note_final(a, o, graph);
            if (o.succeeded()) {
                apply_answer(a, cypher::render_flat(o.table, graph));
                done = true;
                break;
            }
            feedback += attempt_line(it, o);
        }
        if (!done) {
            a.answer_text.clear();
            a.exhausted = !a.budget_hit;
            a.error = a.budget_hit ? "BudgetExceeded after " + std::to_string(a.iterations) + " iterations"
                                   : "LoopExhausted after " + std::to_string(a.iterations) + " iterations";
        }
    } catch (const std::exception& e) {
        a.answer_text.clear();
        a.error = e.what();
    }
    meter.finish(a);
    return a;
}

PipelineAnswer run_agrag(const std::string& question, const graph::PropertyGraph& graph, const PipelineAnswer& grag,
                         llm::Gateway& gateway, const PipelineConfig& config) {
    PipelineAnswer a;
    a.system = "AGRAG";
    a.llm_calls = grag.llm_calls;
    a.usage = grag.usage;
    a.cypher_trace = grag.cypher_trace;
    a.retrieved_context = grag.retrieved_context;
    Meter meter(gateway, config, grag.latency_s);
    if (grag.is_refusal && grag.cypher_trace.empty()) {
        set_refusal(a);
        a.error = grag.error;
        meter.finish(a);
        return a;
    }
    std::string cy = grag.final_cypher;
    std::string result = grag.final_result;
    std::string error = grag.final_error;
    std::string answer = grag.final_error.empty() && !grag.final_result.empty() ? grag.answer_text : std::string();
    a.final_cypher = cy;
    a.final_result = result;
    a.final_error = error;
    const std::string onto = graph.ontology().describe();
    std::string feedback;
    bool done = false;
    try {
        for (int it = 1; it <= config.agrag_max_iters; ++it) {
            if (meter.over_budget()) {
                a.budget_hit = true;
                break;
            }
            const json v = meter.complete_json(llm::PromptRole::CritiqueCypher, {{"question", question},
                                                                                 {"ontology", onto},
                                                                                 {"cypher", cy},
                                                                                 {"result", result},
                                                                                 {"error", error},
                                                                                 {"feedback", feedback}});
            a.iterations = it;
            const std::string verdict = text::to_lower(v.value("verdict", ""));
            if (verdict == "approve") {
                if (error.empty() && !result.empty()) {
                    apply_answer(a, answer);
                    done = true;
                    break;
                }
                feedback += "Attempt " + std::to_string(it) + ": the approved query has no usable result\n";
            } else if (verdict == "cannot_answer") {
                set_refusal(a);
                done = true;
                break;
            } else if (verdict == "refine") {
                auto o = cypher::run_read_query(clean_query(v.value("cypher", "")), graph, true);
                a.cypher_trace.push_back(record(o, "critique"));
                note_final(a, o, graph);
                cy = o.text;
                result = a.final_result;
                error = o.error;
                if (o.succeeded()) {
                    apply_answer(a, cypher::render_flat(o.table, graph));
                    done = true;
                    break;
                }
                feedback += attempt_line(it, o);
            } else {
                feedback += "Attempt " + std::to_string(it) + ": unknown verdict '" + verdict + "'\n";
            }
        }
        if (!done) {
            a.answer_text.clear();
            a.exhausted = !a.budget_hit;
            a.error = a.budget_hit ? "BudgetExceeded after " + std::to_string(a.iterations) + " iterations"
                                   : "LoopExhausted after " + std::to_string(a.iterations) + " iterations";
        }
    } catch (const std::exception& e) {
        a.answer_text.clear();
        a.is_refusal = false;
        a.error = e.what();
    }
    meter.finish(a);
    return a;
}

namespace {

struct GraphBranch {
    std::vector<CypherAttempt> trace;
    std::string query;
    std::string table;  // empty when nothing usable
    int iterations = 0;
    std::size_t calls = 0;
    llm::Usage usage;
    double simulated = 0.0;
    std::string error;
};

struct TextBranch {
    json hits = json::array();
    std::string evidence;
    std::string error;
};

GraphBranch graph_branch(const std::string& question, const graph::PropertyGraph& graph, llm::Gateway& gateway,
                         const PipelineConfig& config) {
    GraphBranch b;
    Meter meter(gateway, config);
    try {
        const std::string onto = graph.ontology().describe();
        auto gen = [&](const std::string& feedback) {
            ++b.iterations;
            return clean_query(meter
                                   .complete(llm::PromptRole::GenCypher, {{"question", question},
                                                                          {"ontology", onto},
                                                                          {"fewshots", "(none)"},
                                                                          {"feedback", feedback}})
                                   .text);
        };
        auto accept = [&](const cypher::QueryOutcome& o) {
            if (!o.succeeded()) return false;
            b.query = o.text;
            if (!cypher::empty_result(o.table)) b.table = cypher::render_table(o.table, graph);
            return true;
        };
        auto o = cypher::run_read_query(gen(""), graph, false);
        b.trace.push_back(record(o, "llm"));
        if (!accept(o)) {
            const std::string fixed = rule_based_fixes(o.text, graph.ontology(), config.injected_limit);
            if (fixed != o.text) {
                auto f = cypher::run_read_query(fixed, graph, false);
                b.trace.push_back(record(f, "rule_fix"));
                accept(f);
                o = f;
            }
            if (!o.succeeded() && !meter.over_budget()) {
                auto r = cypher::run_read_query(gen(attempt_line(1, o)), graph, false);
                b.trace.push_back(record(r, "repair"));
                if (!accept(r)) b.error = r.error;
            } else if (!o.succeeded()) {
                b.error = "BudgetExceeded before repair";
            }
        }
    } catch (const std::exception& e) {
        b.error = e.what();
    }
    b.calls = meter.calls;
    b.usage = meter.usage;
    b.simulated = meter.simulated();
    return b;
}

TextBranch text_branch(const std::string& question, const std::vector<retrieval::SearchDoc>& docs,
                       llm::Gateway& gateway, const PipelineConfig& config) {
    TextBranch t;
    try {
        if (docs.empty()) return t;
        const auto q = gateway.embed({question}).at(0);
        for (const auto& h : retrieval::hybrid_retrieve(question, q, docs, config.hrag_k, config.hybrid_alpha)) {
            if (h.keyword_score <= 0) continue;
            t.hits.push_back({{"ref", h.ref},
                              {"score", h.score},
                              {"vector_score", h.vector_score},
                              {"keyword_score", h.keyword_score},
                              {"text", docs[h.index].text}});
            t.evidence += "[" + h.ref + "] " + docs[h.index].text + "\n";
        }
    } catch (const std::exception& e) {
        t.error = e.what();
    }
    return t;
}

}  // namespace

PipelineAnswer run_hrag(const std::string& question, const graph::PropertyGraph& graph,
                        const std::vector<retrieval::SearchDoc>& searchdocs, llm::Gateway& gateway,
                        const llm::Guardrail& guardrail, const PipelineConfig& config) {
    PipelineAnswer a;
    a.system = "HRAG";
    Meter meter(gateway, config);
    try {
        if (guardrail_rejects(question, guardrail, meter, config)) {
            set_refusal(a);
            a.error = "guardrail rejected the question";
            meter.finish(a);
            return a;
        }
    } catch (const std::exception& e) {
        a.error = e.what();
        meter.finish(a);
        return a;
    }

    std::future<GraphBranch> gf;
    if (config.hrag_graph_branch)
        gf = std::async(std::launch::async, [&] { return graph_branch(question, graph, gateway, config); });
    TextBranch tb;
    if (config.hrag_text_branch) tb = text_branch(question, searchdocs, gateway, config);
    GraphBranch gb;
    if (gf.valid()) gb = gf.get();

    a.cypher_trace = gb.trace;
    a.iterations = gb.iterations;
    a.final_cypher = gb.query;
    a.final_result = gb.table;
    a.retrieved_context = {{"graph", {{"cypher", gb.query}, {"table", gb.table}, {"error", gb.error}}},
                           {"text", tb.hits}};
    std::vector<std::string> errs;
    if (!gb.error.empty()) errs.push_back("graph branch: " + gb.error);
    if (!tb.error.empty()) errs.push_back("text branch: " + tb.error);

    Meter synth(gateway, config, meter.elapsed() + gb.simulated);
    if (gb.table.empty() && tb.hits.empty()) {
        set_refusal(a);
    } else if (synth.over_budget()) {
        set_refusal(a);
        a.budget_hit = true;
    } else {
        try {
            auto r = synth.complete(llm::PromptRole::SynthesizeHybrid,
                                    {{"question", question},
                                     {"graph_cypher", gb.table.empty() ? "(none)" : gb.query},
                                     {"graph_result", gb.table.empty() ? "(no rows)" : gb.table},
                                     {"text_evidence", tb.evidence.empty() ? "(none)" : tb.evidence}});
            apply_answer(a, r.text);
        } catch (const std::exception& e) {
            errs.push_back(std::string("synthesis: ") + e.what());
            a.answer_text.clear();
        }
    }
    for (std::size_t i = 0; i < errs.size(); ++i) a.error += (i ? "; " : "") + errs[i];
    a.llm_calls = meter.calls + gb.calls + synth.calls;
    a.usage = meter.usage;
    a.usage += gb.usage;
    a.usage += synth.usage;
    a.latency_s = synth.elapsed();
    return a;
}

}  // namespace ctirag::pipelines
