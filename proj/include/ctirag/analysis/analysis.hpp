/// @file analysis.hpp
/// @brief Downstream statistics over judge scores: paired deltas, failure
/// rates, stability, ranks, timing, decorrelation, ensembles, cost and
/// question features.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctirag::analysis {

enum class AnalysisErrc {
    LengthMismatch,
    InsufficientRuns,
    ZeroMean,
    MissingSystem,
    EmptySubset,
    MissingPrice,
};

const char* to_string(AnalysisErrc code);

class AnalysisError : public std::runtime_error {
public:
    AnalysisError(AnalysisErrc code, const std::string& what);
    AnalysisErrc code() const { return code_; }

private:
    AnalysisErrc code_;
};

inline constexpr int kAttackThreshold = 15;
inline constexpr int kCollapseThreshold = 10;
inline constexpr int kCorrectThreshold = 40;
inline constexpr int kHallucinationC3 = 2;
inline constexpr int kFluentC4 = 3;

bool is_attack_success(int total);
bool is_collapse(int total);
/// c3 <= 2.
bool is_hallucination(int c3);
/// c3 <= 2 and c4 >= 3.
bool is_fluent_hallucination(int c3, int c4);
/// c1, c2 and c3 all <= 2.
bool is_full_collapse(int c1, int c2, int c3);

enum class Bucket { NearZero, Partial, Correct };
/// near-zero <= 10 < partial < 40 <= correct.
Bucket bucket(int total);

struct DeltaStat {
    std::string system_a;
    std::string system_b;
    std::size_t n = 0;
    double mean_delta = 0;
    double ci_low = 0;
    double ci_high = 0;
    double median_delta = 0;
    std::optional<double> cohens_d;  // null when sd(delta) is 0 or n < 2
};

/// Paired deltas a−b with a percentile bootstrap 95% CI of the mean.
DeltaStat paired_delta(std::span<const double> a, std::span<const double> b, std::size_t resamples = 10000,
                       std::uint64_t seed = 0);

struct JudgeCells {
    int c1 = 0, c2 = 0, c3 = 0, c4 = 0, total = 0;
};

struct FailureProfile {
    std::size_t n = 0;
    double correct_rate = 0;
    double partial_rate = 0;
    double near_zero_rate = 0;
    double hallucination_rate = 0;        // fluent: c3 <= 2 and c4 >= 3
    double any_hallucination_rate = 0;    // c3 <= 2
    double full_collapse_rate = 0;        // c1, c2, c3 <= 2
    double collapse_rate = 0;             // total <= 10
    double attack_success_rate = 0;       // total <= 15
};

FailureProfile classify_rates(std::span<const JudgeCells> scores);

struct StabilityStat {
    std::vector<double> run_means;
    double mean = 0;
    double sd = 0;
    double cv_percent = 0;
};

/// CV = sample sd / mean × 100. Needs >= 2 runs and a non-zero mean.
StabilityStat stability(std::span<const double> run_means);

struct RankSummary {
    double mean_rank = 0;
    double sole_best_rate = 0;
    double best_or_tied_rate = 0;
};

/// Scores per system, aligned by question. Rank 1 = highest score.
std::map<std::string, RankSummary> mean_ranks(const std::map<std::string, std::vector<double>>& scores);

struct TimingDetector {
    double threshold_s = 0;
    std::size_t above = 0;
    std::size_t failures = 0;
    std::size_t failures_above = 0;
    std::optional<double> precision;
    std::optional<double> recall;
};

/// A response is slow when latency > T.
std::vector<TimingDetector> timing_detector(std::span<const double> latencies, const std::vector<bool>& failures,
                                            std::span<const double> thresholds);

using NullableMatrix = std::map<std::string, std::map<std::string, std::optional<double>>>;

struct Decorrelation {
    NullableMatrix pearson;
    std::map<std::string, std::map<std::string, double>> jaccard;
};

Decorrelation failure_decorrelation(const std::map<std::string, std::vector<bool>>& failures);

/// |A∩B| / |A∪B|; 1 when both are empty.
double jaccard(const std::vector<bool>& a, const std::vector<bool>& b);

struct EnsembleResult {
    std::vector<std::string> subset;
    double mean_score = 0;
    double fail_rate = 0;
    double perfect_rate = 0;
};

/// Per question the best score over `subset`; fail when <= 10, perfect at 50.
EnsembleResult ensemble_oracle(const std::map<std::string, std::vector<double>>& scores,
                               const std::vector<std::string>& subset);

struct ModelPrice {
    double input_per_m = 0;
    double output_per_m = 0;
    bool reasoning = false;
};

struct TokenBudget {
    double input = 0;
    double output = 0;
    double reasoning = 0;
};

struct CostModel {
    std::map<std::string, double> multipliers{{"RAG", 1.0}, {"GRAG", 3.0}, {"AGRAG", 3.5}, {"HRAG", 5.0}};
    std::map<std::string, ModelPrice> prices;
    TokenBudget budget;
    /// Applied to reasoning tokens of reasoning-flagged models only.
    std::map<std::string, double> category_reasoning_scale;

    static CostModel defaults();
};

/// multiplier(system) × (in·p_in + out·p_out [+ reasoning·scale(category)·p_out]) / 1e6.
double cost_estimate(const CostModel& model, const std::string& model_name, const std::string& system,
                     const std::string& category);

struct QuestionFeatures {
    double word_count = 0;
    double multi_entity = 0;
    double gold_words = 0;
    double has_which = 0;
    double has_how_many = 0;
    double temporal = 0;
};

QuestionFeatures question_features(const std::string& question, const std::string& gold);

const std::vector<std::string>& feature_names();

/// feature -> system -> Pearson(feature, failure); null when degenerate.
NullableMatrix feature_failure_correlation(const std::vector<QuestionFeatures>& features,
                                           const std::map<std::string, std::vector<bool>>& failures);

}  // namespace ctirag::analysis
