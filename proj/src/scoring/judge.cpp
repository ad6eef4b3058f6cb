#include "ctirag/scoring/judge.hpp"

#include <map>

#include "ctirag/common/stats.hpp"
#include "ctirag/common/text.hpp"
#include "ctirag/llm/prompts.hpp"
#include "ctirag/scoring/metrics.hpp"

namespace ctirag::scoring {

using nlohmann::json;

int weighted_total(int c1, int c2, int c3, int c4) {
    for (int c : {c1, c2, c3, c4})
        if (c < 0 || c > 5) throw ScoringError(ScoringErrc::OutOfRange, "criterion " + std::to_string(c) + " outside 0..5");
    return 4 * c1 + 3 * c2 + 2 * c3 + c4;
}

bool gold_is_unanswerable(const std::string& gold) {
    const std::string g = text::to_lower(text::trim(gold));
    return g.empty() || g == "unanswerable" || llm::is_refusal_text(g);
}

namespace {

std::optional<int> criterion(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) return std::nullopt;
    if (it->is_number_integer()) return it->get<int>();
    if (it->is_number_float()) {
        double d = it->get<double>();
        if (d == static_cast<int>(d)) return static_cast<int>(d);
    }
    return std::nullopt;
}

/// Returns an error description, or empty when `reply` covers every candidate.
std::string parse_reply(const json& reply, const std::vector<Candidate>& candidates, std::vector<JudgeScore>& out) {
    out.clear();
    if (!reply.is_object() || !reply.contains("scores") || !reply.at("scores").is_array())
        return "reply needs a \"scores\" array";
    std::map<std::string, const json*> by_system;
    for (const auto& s : reply.at("scores"))
        if (s.is_object() && s.contains("system") && s.at("system").is_string())
            by_system[text::to_lower(s.at("system").get<std::string>())] = &s;
    for (const auto& c : candidates) {
        auto it = by_system.find(text::to_lower(c.system));
        if (it == by_system.end()) return "no score for system " + c.system;
        const json& s = *it->second;
        JudgeScore js;
        js.system = c.system;
        auto c1 = criterion(s, "c1"), c2 = criterion(s, "c2"), c3 = criterion(s, "c3"), c4 = criterion(s, "c4");
        if (!c1 || !c2 || !c3 || !c4) return "system " + c.system + " needs integer c1..c4";
        for (int v : {*c1, *c2, *c3, *c4})
            if (v < 0 || v > 5) return "system " + c.system + " has a criterion outside 0..5";
        js.c1 = *c1;
        js.c2 = *c2;
        js.c3 = *c3;
        js.c4 = *c4;
        js.comment = s.value("comment", std::string());
        out.push_back(std::move(js));
    }
    return {};
}

}  // namespace

void finalize_scores(std::vector<JudgeScore>& scores, const std::string& gold, const std::vector<Candidate>& candidates) {
    const bool unanswerable = gold_is_unanswerable(gold);
    std::vector<double> totals;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto& s = scores[i];
        if (unanswerable && i < candidates.size() && llm::is_refusal_text(candidates[i].answer)) {
            s.c1 = s.c2 = s.c3 = 5;
            s.refusal_rule = true;
        }
        s.weighted_total = weighted_total(s.c1, s.c2, s.c3, s.c4);
        totals.push_back(s.weighted_total);
    }
    const auto ranks = stats::average_ranks(totals, true);
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = ranks[i];
}

std::vector<JudgeScore> judge(const std::string& question, const std::string& gold,
                              const std::vector<Candidate>& candidates, llm::Gateway& gateway) {
    json cands = json::array();
    for (const auto& c : candidates) cands.push_back({{"system", c.system}, {"answer", c.answer}});
    llm::Slots slots{{"question", question},
                     {"gold", gold_is_unanswerable(gold) ? std::string("(none: the question cannot be answered from the sources)") : gold},
                     {"candidates", cands.dump(2)},
                     {"feedback", ""}};
    std::vector<JudgeScore> scores;
    std::string err;
    for (int attempt = 0; attempt < 2; ++attempt) {
        json reply;
        try {
            reply = gateway.complete_json(llm::PromptRole::Judge, slots);
        } catch (const llm::LlmError& e) {
            if (e.code() == llm::LlmErrc::JsonParse) throw ScoringError(ScoringErrc::JudgeParse, e.what());
            throw;
        }
        err = parse_reply(reply, candidates, scores);
        if (err.empty()) {
            finalize_scores(scores, gold, candidates);
            return scores;
        }
        slots["feedback"] = "Your previous reply was rejected: " + err + ". Score every candidate with integers 0-5.";
    }
    throw ScoringError(ScoringErrc::JudgeParse, err);
}

CriterionMatrix criterion_correlations(const std::vector<JudgeScore>& scores) {
    if (scores.size() < 2) throw ScoringError(ScoringErrc::DegenerateVariance, "need at least two scores");
    std::array<std::vector<double>, 4> cols;
    for (const auto& s : scores) {
        cols[0].push_back(s.c1);
        cols[1].push_back(s.c2);
        cols[2].push_back(s.c3);
        cols[3].push_back(s.c4);
    }
    CriterionMatrix m{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i; j < 4; ++j) {
            auto r = stats::pearson(cols[i], cols[j]);
            if (!r) throw ScoringError(ScoringErrc::DegenerateVariance, "criterion c" + std::to_string(i + 1) + " or c" +
                                                                           std::to_string(j + 1) + " is constant");
            m[i][j] = m[j][i] = i == j ? 1.0 : *r;
        }
    }
    return m;
}

json to_json(const JudgeScore& s) {
    return {{"system", s.system}, {"c1", s.c1},         {"c2", s.c2},     {"c3", s.c3},
            {"c4", s.c4},         {"total", s.weighted_total}, {"rank", s.rank}, {"comment", s.comment},
            {"refusal_rule", s.refusal_rule}};
}

JudgeScore judge_from_json(const json& j) {
    JudgeScore s;
    s.system = j.value("system", std::string());
    s.c1 = j.value("c1", 0);
    s.c2 = j.value("c2", 0);
    s.c3 = j.value("c3", 0);
    s.c4 = j.value("c4", 0);
    s.weighted_total = weighted_total(s.c1, s.c2, s.c3, s.c4);
    s.rank = j.value("rank", 0.0);
    s.comment = j.value("comment", std::string());
    s.refusal_rule = j.value("refusal_rule", false);
    return s;
}

}  // namespace ctirag::scoring
