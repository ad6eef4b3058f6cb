#include "ctirag/llm/prompts.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "ctirag/common/text.hpp"
#include "ctirag/llm/gateway.hpp"

namespace ctirag::llm {

namespace {

struct RoleInfo {
    PromptRole role;
    const char* name;
    const char* primary;
    std::string text;
};

const std::vector<RoleInfo>& roles() {
    static const std::vector<RoleInfo> kRoles = {
        {PromptRole::IngestToCypher, "INGEST_TO_CYPHER", "document_id",
         "You convert cyber threat intelligence reports into Cypher for a property graph.\n"
         "Use only these labels, relationship types and properties:\n{{ontology}}\n"
         "Rules: emit MERGE statements only, one per line, each ending with ';'. Every node needs a name. "
         "Give every relationship an evidence quote, source_id '{{document_id}}' and page when known. "
         "Country nodes carry an ISO 3166-1 alpha-2 code. Do not invent facts absent from the report.\n"
         "{{feedback}}\n"
         "Report {{document_id}}:\n{{document}}\n"},
        {PromptRole::FewshotPairs, "FEWSHOT_PAIRS", "statements",
         "Write {{count}} (question, Cypher) example pairs for a graph built from the statements below.\n"
         "Schema:\n{{ontology}}\n"
         "Constraints: read-only clauses only (MATCH, OPTIONAL MATCH, WHERE, RETURN, ORDER BY, LIMIT); "
         "use only schema labels, relationship types and properties; no parameters; only values present "
         "in the statements; alias every returned column. Mix node lookups, one-hop, multi-hop and "
         "aggregate queries. Check JSON validity and the item count before answering.\n"
         "Reply with JSON only: {\"pairs\": [{\"question\": \"...\", \"cypher\": \"...\"}]}\n"
         "{{feedback}}\n"
         "Statements:\n{{statements}}\n"},
        {PromptRole::QaFromCypher, "QA_FROM_CYPHER", "category",
         "Generate {{count}} {{category}} evaluation questions from the Cypher statements below.\n"
         "Schema:\n{{ontology}}\n"
         "Each item carries a read-only verification query whose result is the gold answer. Gold answers "
         "are at most 12 words. SIMPLE asks for a node property, SINGLE_HOP follows one relationship, "
         "MULTI_HOP chains two or more (aggregates with count or collect are welcome), UNANSWERABLE asks "
         "about a fact the graph lacks and its query must return nothing. No multiple-choice or opinion "
         "questions. Avoid these existing questions:\n{{avoid}}\n"
         "Reply with JSON only: {\"items\": [{\"question\": \"...\", \"answer\": \"...\", \"cypher\": \"...\", "
         "\"aggregate\": false}]}\n"
         "{{feedback}}\n"
         "Statements:\n{{statements}}\n"},
        {PromptRole::GuidedQa, "GUIDED_QA", "document_id",
         "Write {{count}} analyst questions inspired by the external report below: half multi-hop, half "
         "simple or single-hop. Cover threat actors, techniques, sectors and geopolitical context. Every "
         "question must name at least one of these known entities: {{entities}}. Skip trivial single-fact "
         "lookups. Avoid these existing questions:\n{{avoid}}\n"
         "Reply with JSON only: {\"items\": [{\"question\": \"...\", \"answer\": \"...\", \"multi_hop\": true}]}\n"
         "{{feedback}}\n"
         "External report {{document_id}}:\n{{document}}\n"},
        {PromptRole::AnswerRag, "ANSWER_RAG", "question",
         "Answer the question using only the context. Be brief. If the context does not contain the "
         "answer, reply exactly: insufficient information in the provided context\n"
         "Context:\n{{context}}\n"
         "Question: {{question}}\n"},
        {PromptRole::GenCypher, "GEN_CYPHER", "question",
         "Translate the question into one read-only Cypher query over this schema:\n{{ontology}}\n"
         "Alias every returned column. Reply with the query only.\n"
         "Examples:\n{{fewshots}}\n"
         "{{feedback}}\n"
         "Question: {{question}}\n"},
        {PromptRole::CritiqueCypher, "CRITIQUE_CYPHER", "question",
         "Review a Cypher query written for the question below against the schema and its execution "
         "outcome.\nSchema:\n{{ontology}}\n"
         "Query:\n{{cypher}}\n"
         "Result:\n{{result}}\n"
         "Error:\n{{error}}\n"
         "{{feedback}}\n"
         "Reply with JSON only: {\"verdict\": \"approve\" | \"refine\" | \"cannot_answer\", \"cypher\": \"...\", "
         "\"comment\": \"...\"}\n"
         "Question: {{question}}\n"},
        {PromptRole::SynthesizeHybrid, "SYNTHESIZE_HYBRID", "question",
         "Answer the question from the evidence below. Graph results are exact facts and take priority; "
         "use text snippets to fill gaps. If neither source answers the question, reply exactly: "
         "insufficient information in the provided context\n"
         "Graph query:\n{{graph_cypher}}\n"
         "Graph results:\n{{graph_result}}\n"
         "Text snippets:\n{{text_evidence}}\n"
         "Question: {{question}}\n"},
        {PromptRole::Judge, "JUDGE", "question",
         "Grade each candidate answer against the baseline answer on four criteria, integers 0-5:\n"
         "c1 agreement with the baseline; c2 task adequacy; c3 faithfulness (no unsupported claims); "
         "c4 clarity and brevity. If the baseline is empty or says the question cannot be answered, a "
         "candidate that clearly acknowledges missing information without speculation gets 5 on c1, c2 "
         "and c3.\n"
         "Reply with JSON only: {\"scores\": [{\"system\": \"...\", \"c1\": 0, \"c2\": 0, \"c3\": 0, \"c4\": 0, "
         "\"comment\": \"...\"}]}\n"
         "{{feedback}}\n"
         "Question: {{question}}\n"
         "Baseline answer: {{gold}}\n"
         "Candidates:\n{{candidates}}\n"},
        {PromptRole::Guardrail, "GUARDRAIL", "question",
         "Is the following question about cyber threat intelligence? Reply ACCEPT or REJECT.\n"
         "Question: {{question}}\n"},
    };
    return kRoles;
}

const RoleInfo& info(PromptRole role) {
    for (const auto& r : roles())
        if (r.role == role) return r;
    throw std::logic_error("unknown prompt role");
}

const std::regex& slot_re() {
    static const std::regex re(R"(\{\{([a-z_]+)\}\})");
    return re;
}

}  // namespace

const char* to_string(PromptRole role) { return info(role).name; }

std::optional<PromptRole> role_from_string(std::string_view name) {
    for (const auto& r : roles())
        if (name == r.name) return r.role;
    return std::nullopt;
}

const std::vector<PromptRole>& all_roles() {
    static const std::vector<PromptRole> kAll = [] {
        std::vector<PromptRole> out;
        for (const auto& r : roles()) out.push_back(r.role);
        return out;
    }();
    return kAll;
}

const std::string& template_text(PromptRole role) { return info(role).text; }

const char* primary_slot(PromptRole role) { return info(role).primary; }

std::vector<std::string> template_slots(PromptRole role) {
    std::set<std::string> out;
    const std::string& t = template_text(role);
    for (auto it = std::sregex_iterator(t.begin(), t.end(), slot_re()); it != std::sregex_iterator(); ++it)
        out.insert((*it)[1].str());
    return {out.begin(), out.end()};
}

std::string render_prompt(PromptRole role, const Slots& slots) {
    const std::string& t = template_text(role);
    std::string out;
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(t.begin(), t.end(), slot_re()); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        auto s = slots.find(m[1].str());
        if (s == slots.end())
            throw LlmError(LlmErrc::MissingSlot,
                           std::string(to_string(role)) + " template needs slot '" + m[1].str() + "'");
        out.append(t, last, static_cast<std::size_t>(m.position()) - last);
        out += s->second;
        last = static_cast<std::size_t>(m.position() + m.length());
    }
    out.append(t, last);
    nlohmann::json input(slots);
    out += "<input>\n" + input.dump() + "\n</input>\n";
    return out;
}

nlohmann::json input_block(std::string_view prompt) {
    const auto open = prompt.rfind("<input>\n");
    if (open == std::string_view::npos) return nlohmann::json::object();
    const auto body = open + 8;
    const auto close = prompt.find("\n</input>", body);
    if (close == std::string_view::npos) return nlohmann::json::object();
    auto j = nlohmann::json::parse(prompt.substr(body, close - body), nullptr, false);
    return j.is_discarded() ? nlohmann::json::object() : j;
}

bool is_refusal_text(std::string_view answer) {
    const std::string a = text::to_lower(text::trim(answer));
    if (a.empty()) return false;
    static const std::vector<std::string> kForms = {
        kRefusalPhrase, "i don't know", "i do not know", "cannot be answered", "not enough information",
        "no information", "unable to answer"};
    return std::any_of(kForms.begin(), kForms.end(),
                       [&](const std::string& f) { return a.find(f) != std::string::npos; });
}

}  // namespace ctirag::llm
