#include "ctirag/llm/responders.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <set>

#include "ctirag/common/text.hpp"
#include "ctirag/cypher/executor.hpp"
#include "ctirag/cypher/parser.hpp"
#include "ctirag/llm/guardrail.hpp"
#include "ctirag/llm/mock.hpp"

namespace ctirag::llm {

using nlohmann::json;

namespace {

struct RelPhrase {
    std::string third;    // "APT29 uses X"
    std::string base;     // "does APT29 use"
    std::string passive;  // "the malware used by APT29"
};

const RelPhrase& rel_phrase(const std::string& rel) {
    static const std::map<std::string, RelPhrase> kPhrases = {
        {"attacked", {"attacked", "attack", "attacked by"}},
        {"uses", {"uses", "use", "used by"}},
        {"exploits", {"exploits", "exploit", "exploited by"}},
        {"abuses", {"abuses", "abuse", "abused by"}},
        {"targets", {"targets", "target", "targeted by"}},
        {"includes", {"includes", "include", "included in"}},
        {"occurred_on", {"occurred on", "occur on", "linked to"}},
        {"has_alias", {"has alias", "go by", "listed as an alias of"}},
        {"attributed_to", {"is attributed to", "get attributed to", "responsible for"}},
        {"involved_malware", {"involved", "involve", "involved in"}},
        {"involved_tool", {"involved", "involve", "involved in"}},
        {"used_technique", {"used", "use", "used in"}},
        {"occurred_in", {"occurred in", "occur in", "linked to"}},
        {"targets_sector", {"targets", "target", "targeted by"}},
        {"located_in", {"lies in", "lie in", "containing"}},
        {"motivated_by", {"is motivated by", "act on", "motivating"}},
        {"exploited_in", {"was exploited in", "get exploited in", "exploiting"}},
        {"mitigates", {"mitigates", "mitigate", "mitigated by"}},
        {"leverages", {"leverages", "leverage", "leveraged by"}},
        {"supported_by", {"is supported by", "rely on", "supporting"}},
    };
    static std::map<std::string, RelPhrase> fallback;
    auto it = kPhrases.find(rel);
    if (it != kPhrases.end()) return it->second;
    std::string words = rel;
    std::replace(words.begin(), words.end(), '_', ' ');
    return fallback.emplace(rel, RelPhrase{words, words, words}).first->second;
}

std::string plural(const std::string& h) {
    if (h.empty()) return h;
    const char last = h.back();
    if (std::isupper(static_cast<unsigned char>(last))) return h + "s";
    if (last == 'y' && h.size() > 1 && std::string("aeiou").find(h[h.size() - 2]) == std::string::npos)
        return h.substr(0, h.size() - 1) + "ies";
    if (last == 's' || last == 'x') return h + "es";
    return h + "s";
}

std::string article(const std::string& word) {
    if (word.empty()) return "a";
    return std::string("aeiouAEIOU").find(word[0]) != std::string::npos ? "an" : "a";
}

std::string alias_of(const std::string& label) { return text::to_lower(label); }

std::string lit(const std::string& s) { return to_literal(Value(s)); }

std::string simple_question(const graph::Node& n, const std::string& prop) {
    const std::string& name = n.name();
    const std::string h = human_label(n.label);
    if (prop == "type") return "What type of " + h + " is " + name + "?";
    if (prop == "first_seen") return "When was " + name + " first seen?";
    if (prop == "code") return "What is the ISO country code of " + name + "?";
    if (prop == "technique_id") return "What is the MITRE technique ID of " + name + "?";
    if (prop == "tactic") return "Which tactic does the technique " + name + " belong to?";
    if (prop == "product") return "Which product is affected by " + name + "?";
    if (prop == "published") return "When was " + name + " published?";
    if (prop == "date") return "On what date did the " + h + " " + name + " happen?";
    if (prop == "start_date") return "When did the " + name + " campaign start?";
    if (prop == "end_date") return "When did the " + name + " campaign end?";
    if (prop == "value") return "What is the value of the " + h + " " + name + "?";
    if (prop == "url") return "What is the URL of " + name + "?";
    if (prop == "publisher") return "Who published " + name + "?";
    if (prop == "aliases") return "What aliases does " + name + " have?";
    if (prop == "cvss") return "What CVSS score is recorded for " + name + "?";
    std::string words = prop;
    std::replace(words.begin(), words.end(), '_', ' ');
    return "What is the " + words + " of " + name + "?";
}

std::string simple_cypher(const graph::Node& n, const std::string& prop) {
    return "MATCH (n:" + n.label + " {name: " + lit(n.name()) + "}) RETURN n." + prop + " AS " + prop;
}

std::string forward_question(const std::string& a, const std::string& rel, const std::string& lb, std::size_t i) {
    const auto& p = rel_phrase(rel);
    const std::string stem = "which " + human_label(lb) + " does " + a + " " + p.base + "?";
    return i % 2 == 0 ? "W" + stem.substr(1) : "In the reports, " + stem;
}

std::string forward_cypher(const graph::Node& a, const std::string& rel, const std::string& lb) {
    const std::string al = alias_of(lb);
    return "MATCH (a:" + a.label + " {name: " + lit(a.name()) + "})-[:" + rel + "]->(b:" + lb + ") RETURN b.name AS " +
           al + " ORDER BY " + al;
}

bool nonempty(const std::string& cypher, const graph::PropertyGraph& g) {
    auto out = cypher::run_read_query(cypher, g, true);
    return out.succeeded();
}

bool empty_query(const std::string& cypher, const graph::PropertyGraph& g) {
    try {
        return cypher::empty_result(cypher::execute(cypher::parse(cypher), g));
    } catch (const std::exception&) {
        return false;
    }
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    if (from.empty()) return s;
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

int as_int(const json& v, int def) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        try {
            return std::stoi(v.get<std::string>());
        } catch (const std::exception&) {
        }
    }
    return def;
}

std::string slot(const json& input, const char* key) {
    auto it = input.find(key);
    if (it == input.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

std::set<std::string> avoid_set(const std::string& avoid) {
    std::set<std::string> out;
    for (const auto& line : text::split_lines(avoid)) {
        std::string t = text::to_lower(text::trim(line));
        if (t.rfind("- ", 0) == 0) t = t.substr(2);
        if (!t.empty()) out.insert(t);
    }
    return out;
}

struct Fewshot {
    std::string question;
    std::string cypher;
};

std::vector<Fewshot> parse_fewshots(const std::string& block) {
    std::vector<Fewshot> out;
    for (const auto& raw : text::split_lines(block)) {
        std::string line = text::trim(raw);
        if (text::starts_with_ci(line, "Q:")) {
            out.push_back({text::trim(line.substr(2)), ""});
        } else if (text::starts_with_ci(line, "Cypher:") && !out.empty()) {
            out.back().cypher = text::trim(line.substr(7));
        }
    }
    std::erase_if(out, [](const Fewshot& f) { return f.question.empty() || f.cypher.empty(); });
    return out;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

std::vector<std::string> table_cells(const std::string& rendered) {
    auto lines = text::split_lines(rendered);
    std::vector<std::string> cells;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].rfind("...", 0) == 0) continue;
        std::size_t start = 0;
        while (true) {
            auto bar = lines[i].find(" | ", start);
            std::string c = text::trim(lines[i].substr(start, bar == std::string::npos ? std::string::npos : bar - start));
            if (!c.empty() && c != "null") cells.push_back(c);
            if (bar == std::string::npos) break;
            start = bar + 3;
        }
    }
    return cells;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

json item_json(const TemplateItem& t, const graph::PropertyGraph& g) {
    std::string answer;
    if (t.category != "UNANSWERABLE") {
        try {
            answer = cypher::render_flat(cypher::execute(cypher::parse(t.cypher), g), g);
        } catch (const std::exception&) {
        }
    }
    return {{"question", t.question}, {"answer", answer}, {"cypher", t.cypher}, {"aggregate", t.aggregate}};
}

std::vector<std::string> overlap_terms(const std::string& a) {
    auto t = text::content_tokens(a);
    if (t.empty()) t = text::normalize_tokens(a);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

int clamp5(double x) { return static_cast<int>(std::clamp(std::lround(x), 0L, 5L)); }

int clarity(const std::string& answer) {
    const auto wc = text::word_count(answer);
    if (wc <= 20) return 5;
    if (wc <= 50) return 4;
    if (wc <= 120) return 3;
    return 2;
}

json judge_one(const std::string& system, const std::string& answer, const std::string& gold) {
    int c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    std::string comment;
    const bool unanswerable = text::trim(gold).empty() || is_refusal_text(gold);
    const std::string a = text::trim(answer);
    if (a.empty()) {
        c3 = 3;
        comment = "no answer given";
    } else if (unanswerable) {
        if (is_refusal_text(a)) {
            c1 = c2 = c3 = 5;
            c4 = 5;
            comment = "correctly acknowledges missing information";
        } else {
            c2 = 1;
            c3 = 1;
            c4 = clarity(a);
            comment = "answers a question the sources cannot support";
        }
    } else if (is_refusal_text(a)) {
        c2 = 1;
        c3 = 5;
        c4 = 4;
        comment = "refuses an answerable question";
    } else {
        const auto g = overlap_terms(gold);
        const auto c = overlap_terms(a);
        std::vector<std::string> common;
        std::set_intersection(g.begin(), g.end(), c.begin(), c.end(), std::back_inserter(common));
        const double recall = g.empty() ? 0.0 : static_cast<double>(common.size()) / static_cast<double>(g.size());
        const double precision = c.empty() ? 0.0 : static_cast<double>(common.size()) / static_cast<double>(c.size());
        c1 = clamp5(5.0 * recall);
        c2 = clamp5(5.0 * (0.8 * recall + 0.2 * precision));
        c3 = common.empty() ? 1 : clamp5(2.0 + 3.0 * std::max(recall, precision));
        c4 = clarity(a);
        comment = "term recall " + std::to_string(static_cast<int>(std::lround(recall * 100))) + "%";
    }
    return {{"system", system}, {"c1", c1}, {"c2", c2}, {"c3", c3}, {"c4", c4}, {"comment", comment}};
}

std::string guided_phrase(const std::vector<std::string>& ents, std::size_t i) {
    if (ents.size() >= 2) {
        static const char* kMulti[] = {"How are %1 and %2 connected in recent threat reporting?",
                                       "What links %1 to %2 according to the annual report?",
                                       "Explain the relationship between %1 and %2 in the current threat landscape."};
        return replace_all(replace_all(kMulti[i % 3], "%1", ents[0]), "%2", ents[1]);
    }
    static const char* kSingle[] = {"What role does %1 play in the current threat landscape?",
                                    "Why is %1 highlighted as a concern for defenders?",
                                    "How does the annual report characterize %1?"};
    return replace_all(kSingle[i % 3], "%1", ents[0]);
}

std::vector<std::string> parse_entities(const std::string& s) {
    std::vector<std::string> out;
    auto j = json::parse(s, nullptr, false);
    if (!j.is_discarded() && j.is_array()) {
        for (const auto& e : j)
            if (e.is_string()) out.push_back(e.get<std::string>());
        return out;
    }
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        std::string e = text::trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (!e.empty()) out.push_back(e);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::string human_label(std::string_view label) {
    std::string spaced;
    for (std::size_t i = 0; i < label.size(); ++i) {
        const char c = label[i];
        if (c == '_') {
            spaced += ' ';
            continue;
        }
        if (i > 0 && std::isupper(static_cast<unsigned char>(c)) && std::islower(static_cast<unsigned char>(label[i - 1])))
            spaced += ' ';
        spaced += c;
    }
    std::string out;
    std::size_t start = 0;
    while (start < spaced.size()) {
        auto sp = spaced.find(' ', start);
        std::string w = spaced.substr(start, sp == std::string::npos ? std::string::npos : sp - start);
        const bool keep = std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); }) ||
                          (w.size() >= 2 && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isupper(c); }));
        if (!out.empty()) out += ' ';
        out += keep ? w : text::to_lower(w);
        if (sp == std::string::npos) break;
        start = sp + 1;
    }
    return out;
}

std::vector<std::string> split_sentences(std::string_view t) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        std::string s = text::trim(cur);
        if (!s.empty()) out.push_back(s);
        cur.clear();
    };
    for (std::size_t i = 0; i < t.size(); ++i) {
        const char c = t[i];
        if (c == '\n') {
            flush();
            continue;
        }
        cur += c;
        const bool end = c == '!' || c == '?' || (c == '.' && (i + 1 == t.size() || t[i + 1] == ' ' || t[i + 1] == '\n'));
        if (end) flush();
    }
    flush();
    return out;
}

std::vector<std::string> question_terms(std::string_view question) {
    static const std::set<std::string> kFiller = {"according", "reports", "report", "name", "describe",
                                                  "described", "recorded", "distinct", "exact",  "specific"};
    auto terms = text::content_tokens(question);
    std::erase_if(terms, [](const std::string& t) { return kFiller.count(t) > 0; });
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}

std::string best_sentence(std::string_view question, std::string_view body) {
    const auto terms = question_terms(question);
    std::string best;
    std::size_t best_score = 0;
    for (const auto& s : split_sentences(body)) {
        auto toks = text::normalize_tokens(s);
        std::set<std::string> have(toks.begin(), toks.end());
        std::size_t score = 0;
        for (const auto& t : terms) score += have.count(t);
        if (score > best_score) {
            best_score = score;
            best = s;
        }
    }
    return best;
}

std::string adapt_fewshot(std::string_view fq, std::string_view fc, std::string_view q) {
    static const std::regex kLit(R"('((?:[^'\\]|\\.)*)')");
    const std::string cy(fc);
    std::vector<std::smatch> lits;
    for (auto it = std::sregex_iterator(cy.begin(), cy.end(), kLit); it != std::sregex_iterator(); ++it)
        lits.push_back(*it);
    if (lits.empty()) return text::trim(fq) == text::trim(q) ? cy : std::string();
    if (lits.size() != 1) return {};
    std::string value = lits[0][1].str();
    value = replace_all(replace_all(value, "\\'", "'"), "\\\\", "\\");
    const auto pos = fq.find(value);
    if (value.empty() || pos == std::string_view::npos) return {};
    const std::string_view prefix = fq.substr(0, pos);
    const std::string_view suffix = fq.substr(pos + value.size());
    if (q.size() <= prefix.size() + suffix.size()) return {};
    if (q.substr(0, prefix.size()) != prefix || q.substr(q.size() - suffix.size()) != suffix) return {};
    const std::string x(q.substr(prefix.size(), q.size() - prefix.size() - suffix.size()));
    return cy.substr(0, static_cast<std::size_t>(lits[0].position())) + lit(x) +
           cy.substr(static_cast<std::size_t>(lits[0].position() + lits[0].length()));
}

std::string guess_entity(std::string_view question) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : question) {
        if (c == ' ') {
            if (!cur.empty()) words.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) words.push_back(cur);
    for (auto& w : words) {
        while (!w.empty() && std::string("?,.;:!\"()").find(w.back()) != std::string::npos) w.pop_back();
        while (!w.empty() && std::string("\"(").find(w.front()) != std::string::npos) w.erase(0, 1);
    }
    auto notable = [](const std::string& w) {
        return !w.empty() && (std::isupper(static_cast<unsigned char>(w[0])) ||
                              std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); }));
    };
    std::string best;
    for (std::size_t i = 1; i < words.size(); ++i) {
        if (!notable(words[i])) continue;
        std::size_t j = i;
        std::string span;
        while (j < words.size() && notable(words[j])) span += (span.empty() ? "" : " ") + words[j++];
        if (span.size() > best.size()) best = span;
        i = j;
    }
    if (!best.empty()) return best;
    for (const auto& t : question_terms(question))
        if (t.size() > best.size()) best = t;
    return best;
}

graph::PropertyGraph scratch_graph(std::string_view statements) {
    graph::PropertyGraph g;
    auto run = [&](const cypher::CypherAst& ast) {
        try {
            cypher::execute(ast, g);
        } catch (const std::exception&) {
        }
    };
    try {
        for (const auto& ast : cypher::parse_script(statements)) run(ast);
    } catch (const std::exception&) {
        for (const auto& line : text::split_lines(statements)) {
            try {
                run(cypher::parse(line));
            } catch (const std::exception&) {
            }
        }
    }
    g.freeze();
    return g;
}

std::vector<TemplateItem> template_items(const graph::PropertyGraph& g) {
    std::vector<TemplateItem> out;
    auto push = [&](std::string cat, std::string q, std::string c, bool agg) {
        out.push_back({std::move(cat), std::move(q), std::move(c), agg});
    };

    for (const auto& n : g.nodes()) {
        for (const auto& [k, v] : n.properties) {
            if (k == "name" || k == "source_id" || k == "summary" || is_null_like(v)) continue;
            push("SIMPLE", simple_question(n, k), simple_cypher(n, k), false);
        }
    }

    std::set<std::tuple<std::uint64_t, std::string, std::string>> fwd_seen, rev_seen;
    std::size_t fi = 0;
    for (const auto& e : g.edges()) {
        const auto& a = g.node(e.source);
        const auto& b = g.node(e.target);
        if (fwd_seen.insert({a.id.value, e.label, b.label}).second)
            push("SINGLE_HOP", forward_question(a.name(), e.label, b.label, fi++), forward_cypher(a, e.label, b.label),
                 false);
        if (rev_seen.insert({b.id.value, e.label, a.label}).second) {
            const std::string al = alias_of(a.label);
            push("SINGLE_HOP",
                 "Which " + human_label(a.label) + " " + rel_phrase(e.label).third + " " + b.name() + "?",
                 "MATCH (a:" + a.label + ")-[:" + e.label + "]->(b:" + b.label + " {name: " + lit(b.name()) +
                     "}) RETURN a.name AS " + al + " ORDER BY " + al,
                 false);
        }
    }

    std::set<std::string> multi_seen;
    for (const auto& e1 : g.edges()) {
        const auto& a = g.node(e1.source);
        const auto& b = g.node(e1.target);
        for (const auto eid : g.out_edges(b.id)) {
            const auto& e2 = g.edge(eid);
            if (e2.id == e1.id || e2.target == a.id) continue;
            const auto& c = g.node(e2.target);
            const auto& p1 = rel_phrase(e1.label);
            const auto& p2 = rel_phrase(e2.label);
            const std::string lb = human_label(b.label);
            const std::string path = "-[:" + e1.label + "]->(b:" + b.label + ")-[:" + e2.label + "]->";
            const std::string m1 = "MATCH (a:" + a.label + " {name: " + lit(a.name()) + "})" + path + "(c:" + c.label + ")";
            const std::string m2 = "MATCH (a:" + a.label + ")" + path + "(c:" + c.label + " {name: " + lit(c.name()) + "})";
            const std::string key1 = std::to_string(a.id.value) + e1.label + b.label + e2.label + c.label;
            const std::string key2 = a.label + e1.label + b.label + e2.label + std::to_string(c.id.value);
            if (multi_seen.insert("f" + key1).second) {
                const std::string al = alias_of(c.label);
                const std::string tail = " does the " + lb + " " + p1.passive + " " + a.name() + " " + p2.base + "?";
                push("MULTI_HOP", "Which " + human_label(c.label) + tail,
                     m1 + " RETURN DISTINCT c.name AS " + al + " ORDER BY " + al, false);
                push("MULTI_HOP", "How many distinct " + plural(human_label(c.label)) + tail,
                     m1 + " RETURN count(DISTINCT c) AS count", true);
            }
            if (multi_seen.insert("r" + key2).second) {
                const std::string al = alias_of(a.label);
                const std::string tail = " " + article(lb) + " " + lb + " that " + p2.third + " " + c.name() + "?";
                push("MULTI_HOP", "Which " + human_label(a.label) + " " + p1.third + tail,
                     m2 + " RETURN DISTINCT a.name AS " + al + " ORDER BY " + al, false);
                push("MULTI_HOP", "How many distinct " + plural(human_label(a.label)) + " " + p1.third + tail,
                     m2 + " RETURN count(DISTINCT a) AS count", true);
            }
        }
    }

    const auto& onto = g.ontology();
    std::size_t ui = 0;
    for (const auto& n : g.nodes()) {
        std::vector<std::pair<std::string, std::string>> options;
        if (n.label == "CVE" && !n.property("cvss"))
            options.emplace_back(simple_question(n, "cvss"), simple_cypher(n, "cvss"));
        std::pair<std::string, std::string> prop_opt, rel_opt;
        for (const auto& p : onto.node_properties(n.label)) {
            if (p == "name" || p == "summary" || p == "aliases" || p == "source_id" || n.property(p)) continue;
            prop_opt = {simple_question(n, p), simple_cypher(n, p)};
            break;
        }
        std::set<std::string> used;
        for (const auto eid : g.out_edges(n.id)) used.insert(g.edge(eid).label);
        std::string other;
        for (const auto& m : g.nodes())
            if (m.label != n.label) {
                other = m.label;
                break;
            }
        if (!other.empty()) {
            for (const auto& r : onto.relationship_types()) {
                if (used.count(r)) continue;
                rel_opt = {forward_question(n.name(), r, other, 0), forward_cypher(n, r, other)};
                break;
            }
        }
        if (ui++ % 2 == 0) {
            if (!prop_opt.first.empty()) options.push_back(prop_opt);
            if (!rel_opt.first.empty()) options.push_back(rel_opt);
        } else {
            if (!rel_opt.first.empty()) options.push_back(rel_opt);
            if (!prop_opt.first.empty()) options.push_back(prop_opt);
        }
        for (auto& [q, c] : options)
            if (empty_query(c, g)) push("UNANSWERABLE", q, c, false);
    }

    std::erase_if(out, [&](const TemplateItem& t) { return t.category != "UNANSWERABLE" && !nonempty(t.cypher, g); });
    return out;
}

void register_builtin_responders(ScriptedMock& mock) {
    mock.register_responder("constant", [](const json&, const json& params, const LlmRequest&) {
        return params.value("text", std::string());
    });

    mock.register_responder("refuse", [](const json&, const json&, const LlmRequest&) {
        return std::string(kRefusalPhrase);
    });

    mock.register_responder("extractive_answer", [](const json& in, const json&, const LlmRequest&) {
        static const std::regex ref(R"(\[[^\]\s]+#\d+\]\s*)");
        const std::string context = std::regex_replace(slot(in, "context"), ref, "");
        if (text::trim(context).empty()) return std::string(kRefusalPhrase);
        std::string s = best_sentence(slot(in, "question"), context);
        return s.empty() ? std::string(kRefusalPhrase) : s;
    });

    mock.register_responder("fewshot_cypher", [](const json& in, const json&, const LlmRequest&) {
        const std::string q = text::trim(slot(in, "question"));
        const std::size_t attempt = count_of(slot(in, "feedback"), "Attempt ");
        std::vector<std::string> adapted;
        for (const auto& f : parse_fewshots(slot(in, "fewshots"))) {
            std::string c = adapt_fewshot(f.question, f.cypher, q);
            if (!c.empty() && std::find(adapted.begin(), adapted.end(), c) == adapted.end()) adapted.push_back(c);
        }
        if (attempt < adapted.size()) return adapted[attempt];
        std::string ent = text::to_lower(guess_entity(q));
        ent = replace_all(ent, "'", "");
        return "MATCH (n) WHERE toLower(n.name) CONTAINS '" + ent +
               "' RETURN n.name AS name, n.summary AS summary LIMIT 5";
    });

    mock.register_responder("critique", [](const json& in, const json&, const LlmRequest&) {
        const std::string cy = slot(in, "cypher");
        const std::string err = text::trim(slot(in, "error"));
        const std::string result = text::trim(slot(in, "result"));
        if (err.empty() && !result.empty())
            return json{{"verdict", "approve"}, {"cypher", cy}, {"comment", "the query answers the question"}}.dump();
        static const std::regex kHint(R"((label|relationship type) ([A-Za-z0-9_]+) is not in the ontology \(did you mean ([A-Za-z0-9_]+)\?\))");
        std::string fixed = cy;
        for (auto it = std::sregex_iterator(err.begin(), err.end(), kHint); it != std::sregex_iterator(); ++it)
            fixed = replace_all(fixed, ":" + (*it)[2].str(), ":" + (*it)[3].str());
        if (fixed != cy)
            return json{{"verdict", "refine"}, {"cypher", fixed}, {"comment", "use the schema name from the hint"}}.dump();
        return json{{"verdict", "cannot_answer"}, {"cypher", ""}, {"comment", "the graph does not hold this fact"}}.dump();
    });

    mock.register_responder("synthesize", [](const json& in, const json&, const LlmRequest&) {
        auto cells = table_cells(slot(in, "graph_result"));
        if (!cells.empty()) return join(cells, ", ");
        std::string s = best_sentence(slot(in, "question"), slot(in, "text_evidence"));
        return s.empty() ? std::string(kRefusalPhrase) : s;
    });

    mock.register_responder("heuristic_judge", [](const json& in, const json&, const LlmRequest&) {
        const std::string gold = slot(in, "gold");
        json scores = json::array();
        auto cands = json::parse(slot(in, "candidates"), nullptr, false);
        if (!cands.is_discarded() && cands.is_array()) {
            for (const auto& c : cands)
                scores.push_back(judge_one(c.value("system", std::string()), c.value("answer", std::string()), gold));
        }
        return json{{"scores", scores}}.dump();
    });

    mock.register_responder("keyword_guardrail", [](const json& in, const json&, const LlmRequest&) {
        return std::string(to_string(Guardrail().check(slot(in, "question"))));
    });

    mock.register_responder("template_qa", [](const json& in, const json&, const LlmRequest&) {
        const auto g = scratch_graph(slot(in, "statements"));
        const std::string cat = slot(in, "category");
        const int count = as_int(in.value("count", json()), 5);
        const auto avoid = avoid_set(slot(in, "avoid"));
        const bool want_agg = text::to_lower(slot(in, "feedback")).find("aggregate") != std::string::npos;
        std::vector<TemplateItem> pick;
        for (auto& t : template_items(g))
            if (t.category == cat && !avoid.count(text::to_lower(t.question))) pick.push_back(std::move(t));
        if (want_agg)
            std::stable_partition(pick.begin(), pick.end(), [](const TemplateItem& t) { return t.aggregate; });
        json items = json::array();
        for (const auto& t : pick) {
            if (static_cast<int>(items.size()) >= count) break;
            items.push_back(item_json(t, g));
        }
        return json{{"items", items}}.dump();
    });

    mock.register_responder("template_fewshots", [](const json& in, const json&, const LlmRequest&) {
        const auto g = scratch_graph(slot(in, "statements"));
        const int count = as_int(in.value("count", json()), 10);
        std::map<std::string, std::vector<TemplateItem>> by_cat;
        for (auto& t : template_items(g))
            if (t.category != "UNANSWERABLE") by_cat[t.category].push_back(std::move(t));
        json pairs = json::array();
        const std::vector<std::string> order = {"SIMPLE", "SINGLE_HOP", "MULTI_HOP"};
        std::map<std::string, std::size_t> taken;
        bool progress = true;
        while (static_cast<int>(pairs.size()) < count && progress) {
            progress = false;
            for (const auto& c : order) {
                auto& list = by_cat[c];
                if (taken[c] >= list.size() || static_cast<int>(pairs.size()) >= count) continue;
                const auto& t = list[list.size() - 1 - taken[c]++];
                pairs.push_back({{"question", t.question}, {"cypher", t.cypher}});
                progress = true;
            }
        }
        return json{{"pairs", pairs}}.dump();
    });

    mock.register_responder("guided_qa", [](const json& in, const json&, const LlmRequest&) {
        const auto entities = parse_entities(slot(in, "entities"));
        const int count = as_int(in.value("count", json()), 16);
        const auto avoid = avoid_set(slot(in, "avoid"));
        json multi = json::array(), single = json::array();
        std::set<std::string> seen;
        std::size_t mi = 0, si = 0;
        for (const auto& s : split_sentences(slot(in, "document"))) {
            std::vector<std::string> ents;
            for (const auto& e : entities)
                if (text::contains_phrase(s, e) && std::find(ents.begin(), ents.end(), e) == ents.end())
                    ents.push_back(e);
            if (ents.empty()) continue;
            const bool is_multi = ents.size() >= 2;
            std::string q = guided_phrase(ents, is_multi ? mi : si);
            if (avoid.count(text::to_lower(q)) || !seen.insert(text::to_lower(q)).second) continue;
            (is_multi ? mi : si)++;
            (is_multi ? multi : single).push_back({{"question", q}, {"answer", s}, {"multi_hop", is_multi}});
        }
        json items = json::array();
        const std::size_t half = static_cast<std::size_t>(count) / 2;
        for (std::size_t i = 0; i < multi.size() && i < half; ++i) items.push_back(multi[i]);
        for (std::size_t i = 0; i < single.size() && items.size() < static_cast<std::size_t>(count); ++i)
            items.push_back(single[i]);
        for (std::size_t i = half; i < multi.size() && items.size() < static_cast<std::size_t>(count); ++i)
            items.push_back(multi[i]);
        return json{{"items", items}}.dump();
    });
}

}  // namespace ctirag::llm
