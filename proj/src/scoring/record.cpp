#include "ctirag/scoring/record.hpp"

namespace ctirag::scoring {

using nlohmann::json;

json to_json(const ScoreRecord& r) {
    const auto& j = r.judge;
    return {{"run", r.run},
            {"question_id", r.question_id},
            {"category", r.category},
            {"system", r.system},
            {"metrics", to_json(r.metrics)},
            {"judge", {{"c1", j.c1}, {"c2", j.c2}, {"c3", j.c3}, {"c4", j.c4}, {"total", j.weighted_total},
                       {"rank", j.rank}, {"refusal_rule", j.refusal_rule}, {"comment", j.comment}}},
            {"latency_s", r.latency_s},
            {"is_refusal", r.is_refusal},
            {"iterations", r.iterations},
            {"llm_calls", r.llm_calls},
            {"tokens", {{"input", r.input_tokens}, {"output", r.output_tokens}, {"reasoning", r.reasoning_tokens}}}};
}

ScoreRecord record_from_json(const json& j) {
    ScoreRecord r;
    r.run = j.value("run", 1);
    r.question_id = j.at("question_id").get<std::string>();
    r.category = j.value("category", std::string());
    r.system = j.at("system").get<std::string>();
    if (j.contains("metrics")) r.metrics = metrics_from_json(j.at("metrics"));
    r.judge = judge_from_json(j.at("judge"));
    r.judge.system = r.system;
    r.latency_s = j.value("latency_s", 0.0);
    r.is_refusal = j.value("is_refusal", false);
    r.iterations = j.value("iterations", 0);
    r.llm_calls = j.value("llm_calls", 0);
    if (j.contains("tokens")) {
        const auto& t = j.at("tokens");
        r.input_tokens = t.value("input", std::int64_t{0});
        r.output_tokens = t.value("output", std::int64_t{0});
        r.reasoning_tokens = t.value("reasoning", std::int64_t{0});
    }
    return r;
}

std::vector<ScoreRecord> read_records(const std::vector<json>& rows) {
    std::vector<ScoreRecord> out;
    out.reserve(rows.size());
    for (const auto& j : rows) out.push_back(record_from_json(j));
    return out;
}

}  // namespace ctirag::scoring
