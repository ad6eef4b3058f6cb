/// @file metrics.hpp
/// @brief Token-level answer metrics and the equal-weight composite.

#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctirag::scoring {

enum class ScoringErrc { OutOfRange, JudgeParse, DegenerateVariance, MissingSystem };

const char* to_string(ScoringErrc code);

class ScoringError : public std::runtime_error {
public:
    ScoringError(ScoringErrc code, const std::string& what);
    ScoringErrc code() const { return code_; }

private:
    ScoringErrc code_;
};

/// Multiset token F1. Both empty gives 1, exactly one empty gives 0.
double token_f1(std::string_view candidate, std::string_view reference);

/// Sentence BLEU up to 4-grams with brevity penalty. Unigram precision is
/// unsmoothed; higher orders use add-one smoothing.
double bleu(std::string_view candidate, std::string_view reference);

double rouge1(std::string_view candidate, std::string_view reference);

/// LCS-based F1.
double rouge_l(std::string_view candidate, std::string_view reference);

/// Maps a text to an embedding for semantic similarity.
using TextEmbedder = std::function<std::vector<double>(const std::string&)>;

/// Cosine of the two embeddings clipped to [0,1]; empty-text rules as in
/// token_f1.
double semsim(std::string_view candidate, std::string_view reference, const TextEmbedder& embed);

struct MetricVector {
    double f1 = 0;
    double bleu = 0;
    double rouge1 = 0;
    double rougeL = 0;
    double semsim = 0;
    double composite = 0;
};

/// Mean of the five components; each must lie in [0,1].
double composite(const std::array<double, 5>& components);

MetricVector compute_metrics(std::string_view candidate, std::string_view reference, const TextEmbedder& embed);

nlohmann::json to_json(const MetricVector& m);
MetricVector metrics_from_json(const nlohmann::json& j);

}  // namespace ctirag::scoring
