#include "ctirag/qa/qa_factory.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "ctirag/common/io.hpp"
#include "ctirag/common/stats.hpp"
#include "ctirag/common/text.hpp"
#include "ctirag/cypher/executor.hpp"
#include "ctirag/cypher/parser.hpp"
#include "ctirag/cypher/validator.hpp"
#include "ctirag/llm/prompts.hpp"

namespace ctirag::qa {

using nlohmann::json;

namespace {

std::string same(const std::string& s) { return text::to_lower(text::trim(s)); }

std::string join_lines(const std::vector<std::string>& xs) {
    std::string out;
    for (const auto& x : xs) out += "- " + x + "\n";
    return out;
}

std::string feedback_for(const std::vector<Rejection>& rejected, int missing, const std::string& extra) {
    std::ostringstream os;
    if (!rejected.empty()) {
        os << "These items were rejected:\n";
        for (const auto& r : rejected) os << "- " << r.question << " (" << r.reason << ")\n";
    }
    os << "Provide " << missing << " more items.";
    if (!extra.empty()) os << " " << extra;
    return os.str();
}

/// Empty-result check that tolerates schema violations: unknown labels or
/// properties simply match nothing.
std::optional<std::string> unanswerable_problem(const std::string& cy, const graph::PropertyGraph& g) {
    cypher::CypherAst ast;
    try {
        ast = cypher::parse(cy);
    } catch (const std::exception& e) {
        return std::string("query does not parse: ") + e.what();
    }
    const auto rep = cypher::validate(ast, g.ontology(), cypher::Mode::Read);
    if (!rep.syntactic_ok || !rep.readonly_ok) return "query is not a valid read query: " + rep.summary();
    try {
        if (!cypher::empty_result(cypher::execute(ast, g))) return std::string("query returns rows");
    } catch (const std::exception& e) {
        return std::string("query fails at runtime: ") + e.what();
    }
    return std::nullopt;
}

}  // namespace

const char* to_string(Category c) {
    switch (c) {
        case Category::Simple: return "SIMPLE";
        case Category::SingleHop: return "SINGLE_HOP";
        case Category::MultiHop: return "MULTI_HOP";
        case Category::Guided: return "GUIDED";
        case Category::Unanswerable: return "UNANSWERABLE";
    }
    return "?";
}

std::optional<Category> category_from_string(std::string_view name) {
    for (auto c : all_categories())
        if (name == to_string(c)) return c;
    return std::nullopt;
}

const std::vector<Category>& all_categories() {
    static const std::vector<Category> kAll = {Category::Simple, Category::SingleHop, Category::MultiHop,
                                               Category::Guided, Category::Unanswerable};
    return kAll;
}

const char* to_string(QaErrc code) {
    switch (code) {
        case QaErrc::GenerationUnderflow: return "GenerationUnderflow";
        case QaErrc::BadDataset: return "BadDataset";
    }
    return "?";
}

QaError::QaError(QaErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

json to_json(const QAItem& i) {
    return {{"id", i.id},
            {"question", i.question},
            {"gold_answer", i.gold_answer},
            {"category", to_string(i.category)},
            {"provenance", i.provenance},
            {"is_aggregate", i.is_aggregate},
            {"multi_hop", i.multi_hop}};
}

QAItem item_from_json(const json& j) {
    QAItem i;
    i.id = j.at("id").get<std::string>();
    i.question = j.at("question").get<std::string>();
    i.gold_answer = j.value("gold_answer", "");
    auto c = category_from_string(j.at("category").get<std::string>());
    if (!c) throw QaError(QaErrc::BadDataset, "unknown category " + j.at("category").dump());
    i.category = *c;
    i.provenance = j.value("provenance", "");
    i.is_aggregate = j.value("is_aggregate", false);
    i.multi_hop = j.value("multi_hop", false);
    return i;
}

std::string dataset_jsonl(const std::vector<QAItem>& items) {
    std::vector<json> rows{json{{"format", kDatasetFormat}}};
    for (const auto& i : items) rows.push_back(to_json(i));
    return io::to_jsonl(rows);
}

std::vector<QAItem> parse_dataset_jsonl(std::string_view body) {
    std::vector<QAItem> out;
    bool header = false;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(body)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw QaError(QaErrc::BadDataset, "line " + std::to_string(line_no) + " is not JSON");
        if (!header) {
            if (j.value("format", "") != kDatasetFormat)
                throw QaError(QaErrc::BadDataset, std::string("missing format header ") + kDatasetFormat);
            header = true;
            continue;
        }
        try {
            out.push_back(item_from_json(j));
        } catch (const json::exception& e) {
            throw QaError(QaErrc::BadDataset, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header) throw QaError(QaErrc::BadDataset, "empty dataset");
    return out;
}

std::string item_id(Category c, std::size_t index) {
    std::string prefix = text::to_lower(to_string(c));
    std::replace(prefix.begin(), prefix.end(), '_', '-');
    std::ostringstream os;
    os << prefix << "-" << (index < 10 ? "0" : "") << index;
    return os.str();
}

bool is_aggregate_query(std::string_view cypher) {
    static const std::regex kAgg(R"(\b(count|collect)\s*\()", std::regex::icase);
    const std::string s(cypher);
    return std::regex_search(s, kAgg);
}

std::vector<QAItem> generate_from_cypher(const std::string& statements, const graph::PropertyGraph& graph,
                                         llm::Gateway& gateway, const Quota& quota, GenerationLog* log) {
    std::vector<QAItem> out;
    std::set<std::string> seen;
    std::vector<std::string> avoid;
    const std::string onto = graph.ontology().describe();
    const std::vector<std::pair<Category, int>> plan = {{Category::Simple, quota.simple},
                                                        {Category::SingleHop, quota.single_hop},
                                                        {Category::MultiHop, quota.multi_hop},
                                                        {Category::Unanswerable, quota.unanswerable}};
    for (const auto& [cat, need] : plan) {
        const std::string cname = to_string(cat);
        std::vector<QAItem> accepted;
        int aggregates = 0;
        std::vector<Rejection> last_rejected;
        const bool multi = cat == Category::MultiHop;
        const int plain_cap = multi ? need - quota.min_aggregates : need;
        auto satisfied = [&] {
            return static_cast<int>(accepted.size()) >= need && (!multi || aggregates >= quota.min_aggregates);
        };
        for (int ask = 0; ask <= quota.max_reasks && !satisfied(); ++ask) {
            const int missing = need - static_cast<int>(accepted.size());
            std::string extra;
            if (multi && aggregates < quota.min_aggregates)
                extra = "Include at least " + std::to_string(quota.min_aggregates - aggregates) +
                        " aggregate questions (count or collect).";
            llm::Slots slots{{"statements", statements},
                             {"ontology", onto},
                             {"category", cname},
                             {"count", std::to_string(missing)},
                             {"avoid", join_lines(avoid)},
                             {"feedback", ask == 0 ? std::string() : feedback_for(last_rejected, missing, extra)}};
            if (log) ++log->asks[cname];
            last_rejected.clear();
            json reply;
            try {
                reply = gateway.complete_json(llm::PromptRole::QaFromCypher, slots);
            } catch (const llm::LlmError& e) {
                if (e.code() != llm::LlmErrc::JsonParse) throw;
                last_rejected.push_back({cname, "(reply)", "reply was not valid JSON"});
                continue;
            }
            for (const auto& it : reply.value("items", json::array())) {
                if (satisfied()) break;
                if (!it.is_object()) continue;
                QAItem item;
                item.category = cat;
                item.question = text::trim(it.value("question", ""));
                item.provenance = text::trim(it.value("cypher", ""));
                const std::string claimed = it.contains("answer") && it["answer"].is_string()
                                                ? it["answer"].get<std::string>()
                                                : (it.contains("answer") ? it["answer"].dump() : std::string());
                auto reject = [&](const std::string& why) {
                    Rejection r{cname, item.question, why};
                    last_rejected.push_back(r);
                    if (log) log->rejections.push_back(r);
                    if (!item.question.empty()) avoid.push_back(item.question);
                };
                if (item.question.empty()) {
                    reject("empty question");
                    continue;
                }
                if (seen.count(same(item.question))) {
                    reject("duplicate question");
                    continue;
                }
                if (cat == Category::Unanswerable) {
                    if (auto why = unanswerable_problem(item.provenance, graph)) {
                        reject(*why);
                        continue;
                    }
                    item.gold_answer = "";
                } else {
                    auto o = cypher::run_read_query(item.provenance, graph, true);
                    if (!o.succeeded()) {
                        reject("verification query failed: " + o.error);
                        continue;
                    }
                    item.gold_answer = cypher::render_flat(o.table, graph);
                    if (same(claimed) != same(item.gold_answer)) {
                        reject("answer '" + claimed + "' does not match the query result '" + item.gold_answer + "'");
                        continue;
                    }
                    if (text::word_count(item.gold_answer) > quota.max_gold_words) {
                        reject("gold answer longer than " + std::to_string(quota.max_gold_words) + " words");
                        continue;
                    }
                    item.is_aggregate = multi && is_aggregate_query(item.provenance);
                    item.multi_hop = multi;
                    if (multi && !item.is_aggregate &&
                        static_cast<int>(accepted.size()) - aggregates >= plain_cap) {
                        reject("enough non-aggregate questions; an aggregate is needed");
                        continue;
                    }
                }
                seen.insert(same(item.question));
                avoid.push_back(item.question);
                aggregates += item.is_aggregate;
                accepted.push_back(std::move(item));
            }
        }
        if (!satisfied()) {
            std::ostringstream os;
            os << cname << ": " << accepted.size() << " of " << need << " items";
            if (multi) os << ", " << aggregates << " of " << quota.min_aggregates << " aggregates";
            os << " after " << quota.max_reasks << " re-asks";
            throw QaError(QaErrc::GenerationUnderflow, os.str());
        }
        for (std::size_t i = 0; i < accepted.size(); ++i) {
            accepted[i].id = item_id(cat, i + 1);
            out.push_back(std::move(accepted[i]));
        }
    }
    return out;
}

std::vector<QAItem> generate_guided(const std::string& document_id, const std::string& document,
                                    const graph::PropertyGraph& graph, llm::Gateway& gateway,
                                    const std::vector<std::string>& avoid_in, const Quota& quota,
                                    GenerationLog* log) {
    std::vector<std::string> names;
    std::set<std::string> values;
    for (const auto& n : graph.nodes()) {
        if (!n.name().empty() && std::find(names.begin(), names.end(), n.name()) == names.end())
            names.push_back(n.name());
        for (const auto& [k, v] : n.properties)
            if (!is_null_like(v)) values.insert(same(to_display(v)));
    }
    json entities = names;
    std::vector<std::string> avoid = avoid_in;
    std::set<std::string> seen;
    for (const auto& a : avoid) seen.insert(same(a));
    std::vector<QAItem> multi, other;
    const int need_multi = quota.guided_multi_hop;
    const int need_other = quota.guided - quota.guided_multi_hop;
    std::vector<Rejection> last_rejected;
    auto satisfied = [&] {
        return static_cast<int>(multi.size()) >= need_multi && static_cast<int>(other.size()) >= need_other;
    };
    for (int ask = 0; ask <= quota.max_reasks && !satisfied(); ++ask) {
        const int missing = need_multi + need_other - static_cast<int>(multi.size() + other.size());
        std::string extra;
        if (static_cast<int>(multi.size()) < need_multi)
            extra = std::to_string(need_multi - static_cast<int>(multi.size())) + " of them must be multi-hop.";
        if (log) ++log->asks["GUIDED"];
        llm::Slots slots{{"document_id", document_id},
                         {"document", document},
                         {"entities", entities.dump()},
                         {"count", std::to_string(ask == 0 ? quota.guided : missing)},
                         {"avoid", join_lines(avoid)},
                         {"feedback", ask == 0 ? std::string() : feedback_for(last_rejected, missing, extra)}};
        last_rejected.clear();
        json reply;
        try {
            reply = gateway.complete_json(llm::PromptRole::GuidedQa, slots);
        } catch (const llm::LlmError& e) {
            if (e.code() != llm::LlmErrc::JsonParse) throw;
            last_rejected.push_back({"GUIDED", "(reply)", "reply was not valid JSON"});
            continue;
        }
        for (const auto& it : reply.value("items", json::array())) {
            if (!it.is_object()) continue;
            QAItem item;
            item.category = Category::Guided;
            item.question = text::trim(it.value("question", ""));
            item.gold_answer = text::trim(it.contains("answer") && it["answer"].is_string()
                                              ? it["answer"].get<std::string>()
                                              : std::string());
            item.multi_hop = it.value("multi_hop", false);
            item.provenance = "guided:" + document_id;
            auto reject = [&](const std::string& why) {
                Rejection r{"GUIDED", item.question, why};
                last_rejected.push_back(r);
                if (log) log->rejections.push_back(r);
                if (!item.question.empty()) avoid.push_back(item.question);
            };
            if (item.question.empty()) {
                reject("empty question");
                continue;
            }
            if (seen.count(same(item.question))) {
                reject("duplicate question");
                continue;
            }
            if (std::none_of(names.begin(), names.end(),
                             [&](const std::string& n) { return text::contains_phrase(item.question, n); })) {
                reject("question names no known entity");
                continue;
            }
            if (item.gold_answer.empty()) {
                reject("empty answer");
                continue;
            }
            if (values.count(same(item.gold_answer))) {
                reject("trivial single-fact lookup");
                continue;
            }
            auto& bucket = item.multi_hop ? multi : other;
            const int cap = item.multi_hop ? need_multi : need_other;
            if (static_cast<int>(bucket.size()) >= cap) continue;
            seen.insert(same(item.question));
            avoid.push_back(item.question);
            bucket.push_back(std::move(item));
        }
    }
    if (!satisfied()) {
        std::ostringstream os;
        os << "GUIDED: " << multi.size() << " of " << need_multi << " multi-hop and " << other.size() << " of "
           << need_other << " other items after " << quota.max_reasks << " re-asks";
        throw QaError(QaErrc::GenerationUnderflow, os.str());
    }
    std::vector<QAItem> out;
    for (auto& m : multi) out.push_back(std::move(m));
    for (auto& o : other) out.push_back(std::move(o));
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = item_id(Category::Guided, i + 1);
    return out;
}

DatasetReport validate_dataset(const std::vector<QAItem>& items, std::size_t max_gold_words) {
    DatasetReport r;
    r.total = items.size();
    for (auto c : all_categories()) r.counts[to_string(c)] = 0;
    std::set<std::vector<std::string>> prefixes;
    std::map<std::string, std::vector<double>> words;
    std::vector<double> factoid;
    std::size_t within = 0;
    for (const auto& i : items) {
        ++r.counts[to_string(i.category)];
        auto toks = text::normalize_tokens(i.question);
        toks.resize(std::min<std::size_t>(toks.size(), 4));
        prefixes.insert(toks);
        const double w = static_cast<double>(text::word_count(i.gold_answer));
        words[to_string(i.category)].push_back(w);
        if (i.category == Category::Simple || i.category == Category::SingleHop || i.category == Category::MultiHop) {
            factoid.push_back(w);
            within += w <= static_cast<double>(max_gold_words);
        }
        if (i.category == Category::MultiHop && i.is_aggregate) ++r.aggregate_multihop_count;
    }
    if (!items.empty()) r.prefix_diversity = static_cast<double>(prefixes.size()) / static_cast<double>(items.size());
    if (!factoid.empty()) {
        r.factoid_within_12w = static_cast<double>(within) / static_cast<double>(factoid.size());
        r.factoid_median_words = stats::median(factoid);
    }
    for (const auto& [c, ws] : words) {
        r.mean_answer_words[c] = stats::mean(ws);
        r.median_answer_words[c] = stats::median(ws);
    }
    return r;
}

json to_json(const DatasetReport& r) {
    return {{"counts", r.counts},
            {"total", r.total},
            {"prefix_diversity", r.prefix_diversity},
            {"factoid_within_12w", r.factoid_within_12w},
            {"mean_answer_words", r.mean_answer_words},
            {"median_answer_words", r.median_answer_words},
            {"factoid_median_words", r.factoid_median_words},
            {"aggregate_multihop_count", r.aggregate_multihop_count}};
}

}  // namespace ctirag::qa
