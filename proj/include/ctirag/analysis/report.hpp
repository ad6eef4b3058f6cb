/// @file report.hpp
/// @brief Assembles the analysis report JSON and its per-table CSV exports
/// from scored answers.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/analysis/analysis.hpp"
#include "ctirag/scoring/record.hpp"

namespace ctirag::analysis {

struct QuestionInfo {
    std::string question;
    std::string gold;
    std::string category;
};

struct ReportOptions {
    std::size_t resamples = 10000;
    std::uint64_t seed = 0;
    std::vector<double> timing_thresholds{30, 60, 120, 300, 500};
    CostModel cost = CostModel::defaults();
    std::string answer_model;
    std::string judge_model;
    std::string embedding_model;
};

/// Canonical system order used in every table.
const std::vector<std::string>& system_order();

/// Questions are keyed by "run/question_id". Entries missing from
/// `questions` simply drop out of the feature table.
nlohmann::json build_report(const std::vector<scoring::ScoreRecord>& records,
                            const std::map<std::string, QuestionInfo>& questions, const ReportOptions& options);

/// File name -> CSV text for the report's tables.
std::map<std::string, std::string> report_csvs(const nlohmann::json& report);

}  // namespace ctirag::analysis
