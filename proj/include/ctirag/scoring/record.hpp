/// @file record.hpp
/// @brief One scored answer: the unit of scores.jsonl and of every analysis.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/scoring/judge.hpp"
#include "ctirag/scoring/metrics.hpp"

namespace ctirag::scoring {

struct ScoreRecord {
    int run = 1;
    std::string question_id;
    std::string category;
    std::string system;
    MetricVector metrics;
    JudgeScore judge;
    double latency_s = 0;
    bool is_refusal = false;
    int iterations = 0;
    int llm_calls = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t reasoning_tokens = 0;
};

nlohmann::json to_json(const ScoreRecord& r);
ScoreRecord record_from_json(const nlohmann::json& j);

std::vector<ScoreRecord> read_records(const std::vector<nlohmann::json>& rows);

}  // namespace ctirag::scoring
