/// @file judge.hpp
/// @brief LLM-as-a-judge scoring: criterion parsing, local totals, ranks and
/// inter-criterion correlations.

#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/llm/gateway.hpp"

namespace ctirag::scoring {

struct JudgeScore {
    std::string system;
    int c1 = 0;  // agreement
    int c2 = 0;  // adequacy
    int c3 = 0;  // faithfulness
    int c4 = 0;  // clarity
    int weighted_total = 0;
    std::string comment;
    double rank = 0;
    bool refusal_rule = false;
};

/// 4·c1 + 3·c2 + 2·c3 + c4. Raises OutOfRange unless every criterion is in 0..5.
int weighted_total(int c1, int c2, int c3, int c4);

struct Candidate {
    std::string system;
    std::string answer;
};

/// True when the gold answer marks the question as unanswerable.
bool gold_is_unanswerable(const std::string& gold);

/// Asks the JUDGE role to grade every candidate, recomputes totals locally,
/// applies the refusal rule and assigns average ranks. A reply missing a
/// system or carrying a criterion outside 0..5 is re-asked once before
/// raising JudgeParse.
std::vector<JudgeScore> judge(const std::string& question, const std::string& gold,
                              const std::vector<Candidate>& candidates, llm::Gateway& gateway);

/// Recomputes totals, applies the refusal rule and fills ranks in place.
void finalize_scores(std::vector<JudgeScore>& scores, const std::string& gold, const std::vector<Candidate>& candidates);

using CriterionMatrix = std::array<std::array<double, 4>, 4>;

/// Pearson matrix over (c1..c4). Raises DegenerateVariance when a criterion
/// is constant or fewer than two scores are given.
CriterionMatrix criterion_correlations(const std::vector<JudgeScore>& scores);

nlohmann::json to_json(const JudgeScore& s);
JudgeScore judge_from_json(const nlohmann::json& j);

}  // namespace ctirag::scoring
