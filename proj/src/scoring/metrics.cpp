#include "ctirag/scoring/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ctirag/common/text.hpp"

namespace ctirag::scoring {

const char* to_string(ScoringErrc code) {
    switch (code) {
        case ScoringErrc::OutOfRange: return "OutOfRange";
        case ScoringErrc::JudgeParse: return "JudgeParseError";
        case ScoringErrc::DegenerateVariance: return "DegenerateVariance";
        case ScoringErrc::MissingSystem: return "MissingSystem";
    }
    return "Unknown";
}

ScoringError::ScoringError(ScoringErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

using Tokens = std::vector<std::string>;

std::size_t clipped_overlap(const Tokens& a, const Tokens& b) {
    std::map<std::string, std::size_t> cb;
    for (const auto& t : b) ++cb[t];
    std::size_t n = 0;
    for (const auto& t : a) {
        auto it = cb.find(t);
        if (it != cb.end() && it->second > 0) {
            --it->second;
            ++n;
        }
    }
    return n;
}

double f_measure(double matched, std::size_t cand, std::size_t ref) {
    if (matched == 0) return 0.0;
    const double p = matched / static_cast<double>(cand);
    const double r = matched / static_cast<double>(ref);
    return 2 * p * r / (p + r);
}

std::map<std::vector<std::string>, std::size_t> ngrams(const Tokens& t, std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> out;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + static_cast<long>(i), t.begin() + static_cast<long>(i + n))];
    return out;
}

std::size_t lcs(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double token_f1(std::string_view candidate, std::string_view reference) {
    const auto c = text::normalize_tokens(candidate);
    const auto r = text::normalize_tokens(reference);
    if (c.empty() && r.empty()) return 1.0;
    if (c.empty() || r.empty()) return 0.0;
    return f_measure(static_cast<double>(clipped_overlap(c, r)), c.size(), r.size());
}

double rouge1(std::string_view candidate, std::string_view reference) { return token_f1(candidate, reference); }

double rouge_l(std::string_view candidate, std::string_view reference) {
    const auto c = text::normalize_tokens(candidate);
    const auto r = text::normalize_tokens(reference);
    if (c.empty() && r.empty()) return 1.0;
    if (c.empty() || r.empty()) return 0.0;
    return f_measure(static_cast<double>(lcs(c, r)), c.size(), r.size());
}

double bleu(std::string_view candidate, std::string_view reference) {
    const auto c = text::normalize_tokens(candidate);
    const auto r = text::normalize_tokens(reference);
    if (c.empty() && r.empty()) return 1.0;
    if (c.empty() || r.empty()) return 0.0;
    double log_sum = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto cn = ngrams(c, n);
        const auto rn = ngrams(r, n);
        double match = 0, total = 0;
        for (const auto& [g, k] : cn) {
            total += static_cast<double>(k);
            auto it = rn.find(g);
            if (it != rn.end()) match += static_cast<double>(std::min(k, it->second));
        }
        if (n == 1) {
            if (match == 0) return 0.0;
            log_sum += std::log(match / total);
        } else {
            log_sum += std::log((match + 1) / (total + 1));
        }
    }
    const double bp = c.size() >= r.size() ? 1.0 : std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(c.size()));
    return std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
}

double semsim(std::string_view candidate, std::string_view reference, const TextEmbedder& embed) {
    const bool ce = text::normalize_tokens(candidate).empty();
    const bool re = text::normalize_tokens(reference).empty();
    if (ce && re) return 1.0;
    if (ce || re) return 0.0;
    const auto a = embed(std::string(candidate));
    const auto b = embed(std::string(reference));
    if (a.size() != b.size() || a.empty()) throw ScoringError(ScoringErrc::OutOfRange, "embedding dimensions differ");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

double composite(const std::array<double, 5>& components) {
    double sum = 0;
    for (double x : components) {
        if (!(x >= 0.0 && x <= 1.0)) throw ScoringError(ScoringErrc::OutOfRange, "metric component outside [0,1]");
        sum += x;
    }
    return sum / 5.0;
}

MetricVector compute_metrics(std::string_view candidate, std::string_view reference, const TextEmbedder& embed) {
    MetricVector m;
    m.f1 = token_f1(candidate, reference);
    m.bleu = bleu(candidate, reference);
    m.rouge1 = rouge1(candidate, reference);
    m.rougeL = rouge_l(candidate, reference);
    m.semsim = semsim(candidate, reference, embed);
    m.composite = composite({m.f1, m.bleu, m.rouge1, m.rougeL, m.semsim});
    return m;
}

nlohmann::json to_json(const MetricVector& m) {
    return {{"f1", m.f1}, {"bleu", m.bleu}, {"rouge1", m.rouge1}, {"rougeL", m.rougeL}, {"semsim", m.semsim},
            {"composite", m.composite}};
}

MetricVector metrics_from_json(const nlohmann::json& j) {
    MetricVector m;
    m.f1 = j.value("f1", 0.0);
    m.bleu = j.value("bleu", 0.0);
    m.rouge1 = j.value("rouge1", 0.0);
    m.rougeL = j.value("rougeL", 0.0);
    m.semsim = j.value("semsim", 0.0);
    m.composite = j.value("composite", 0.0);
    return m;
}

}  // namespace ctirag::scoring
