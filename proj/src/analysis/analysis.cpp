#include "ctirag/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>
#include <set>

#include "ctirag/common/stats.hpp"
#include "ctirag/common/text.hpp"

namespace ctirag::analysis {

const char* to_string(AnalysisErrc code) {
    switch (code) {
        case AnalysisErrc::LengthMismatch: return "LengthMismatch";
        case AnalysisErrc::InsufficientRuns: return "InsufficientRuns";
        case AnalysisErrc::ZeroMean: return "ZeroMean";
        case AnalysisErrc::MissingSystem: return "MissingSystem";
        case AnalysisErrc::EmptySubset: return "EmptySubset";
        case AnalysisErrc::MissingPrice: return "MissingPrice";
    }
    return "Unknown";
}

AnalysisError::AnalysisError(AnalysisErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool is_attack_success(int total) { return total <= kAttackThreshold; }
bool is_collapse(int total) { return total <= kCollapseThreshold; }
bool is_hallucination(int c3) { return c3 <= kHallucinationC3; }
bool is_fluent_hallucination(int c3, int c4) { return c3 <= kHallucinationC3 && c4 >= kFluentC4; }
bool is_full_collapse(int c1, int c2, int c3) { return c1 <= 2 && c2 <= 2 && c3 <= 2; }

Bucket bucket(int total) {
    if (total <= kCollapseThreshold) return Bucket::NearZero;
    if (total < kCorrectThreshold) return Bucket::Partial;
    return Bucket::Correct;
}

DeltaStat paired_delta(std::span<const double> a, std::span<const double> b, std::size_t resamples, std::uint64_t seed) {
    if (a.size() != b.size())
        throw AnalysisError(AnalysisErrc::LengthMismatch,
                            std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " paired scores");
    if (a.empty()) throw AnalysisError(AnalysisErrc::LengthMismatch, "no paired scores");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    DeltaStat s;
    s.n = d.size();
    s.mean_delta = stats::mean(d);
    s.median_delta = stats::median(d);
    if (d.size() >= 2) {
        const double sd = stats::sample_sd(d);
        if (sd > 0) s.cohens_d = s.mean_delta / sd;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
    std::vector<double> means(std::max<std::size_t>(resamples, 1));
    for (auto& m : means) {
        double sum = 0;
        for (std::size_t i = 0; i < d.size(); ++i) sum += d[pick(rng)];
        m = sum / static_cast<double>(d.size());
    }
    s.ci_low = stats::quantile(means, 0.025);
    s.ci_high = stats::quantile(means, 0.975);
    return s;
}

FailureProfile classify_rates(std::span<const JudgeCells> scores) {
    FailureProfile p;
    p.n = scores.size();
    if (scores.empty()) return p;
    for (const auto& s : scores) {
        switch (bucket(s.total)) {
            case Bucket::NearZero: p.near_zero_rate += 1; break;
            case Bucket::Partial: p.partial_rate += 1; break;
            case Bucket::Correct: p.correct_rate += 1; break;
        }
        p.hallucination_rate += is_fluent_hallucination(s.c3, s.c4);
        p.any_hallucination_rate += is_hallucination(s.c3);
        p.full_collapse_rate += is_full_collapse(s.c1, s.c2, s.c3);
        p.collapse_rate += is_collapse(s.total);
        p.attack_success_rate += is_attack_success(s.total);
    }
    const double n = static_cast<double>(scores.size());
    for (double* x : {&p.correct_rate, &p.partial_rate, &p.near_zero_rate, &p.hallucination_rate,
                      &p.any_hallucination_rate, &p.full_collapse_rate, &p.collapse_rate, &p.attack_success_rate})
        *x /= n;
    return p;
}

StabilityStat stability(std::span<const double> run_means) {
    if (run_means.size() < 2) throw AnalysisError(AnalysisErrc::InsufficientRuns, "stability needs at least two runs");
    StabilityStat s;
    s.run_means.assign(run_means.begin(), run_means.end());
    s.mean = stats::mean(run_means);
    s.sd = stats::sample_sd(run_means);
    if (s.mean == 0) throw AnalysisError(AnalysisErrc::ZeroMean, "mean of run means is zero");
    s.cv_percent = s.sd / s.mean * 100.0;
    return s;
}

std::map<std::string, RankSummary> mean_ranks(const std::map<std::string, std::vector<double>>& scores) {
    std::map<std::string, RankSummary> out;
    if (scores.empty()) return out;
    const std::size_t n = scores.begin()->second.size();
    for (const auto& [sys, v] : scores)
        if (v.size() != n) throw AnalysisError(AnalysisErrc::MissingSystem, sys + " lacks scores for some questions");
    if (n == 0) return out;
    std::vector<std::string> names;
    for (const auto& [sys, v] : scores) names.push_back(sys);
    for (std::size_t q = 0; q < n; ++q) {
        std::vector<double> row;
        for (const auto& s : names) row.push_back(scores.at(s)[q]);
        const auto ranks = stats::average_ranks(row, true);
        const double best = *std::max_element(row.begin(), row.end());
        const auto ties = std::count(row.begin(), row.end(), best);
        for (std::size_t i = 0; i < names.size(); ++i) {
            auto& r = out[names[i]];
            r.mean_rank += ranks[i];
            if (row[i] == best) {
                r.best_or_tied_rate += 1;
                if (ties == 1) r.sole_best_rate += 1;
            }
        }
    }
    for (auto& [sys, r] : out) {
        r.mean_rank /= static_cast<double>(n);
        r.sole_best_rate /= static_cast<double>(n);
        r.best_or_tied_rate /= static_cast<double>(n);
    }
    return out;
}

std::vector<TimingDetector> timing_detector(std::span<const double> latencies, const std::vector<bool>& failures,
                                            std::span<const double> thresholds) {
    if (latencies.size() != failures.size())
        throw AnalysisError(AnalysisErrc::LengthMismatch, "latencies and failure flags differ in length");
    std::vector<TimingDetector> out;
    for (double t : thresholds) {
        TimingDetector d;
        d.threshold_s = t;
        for (std::size_t i = 0; i < latencies.size(); ++i) {
            const bool slow = latencies[i] > t;
            d.above += slow;
            d.failures += failures[i];
            d.failures_above += slow && failures[i];
        }
        if (d.above > 0) d.precision = static_cast<double>(d.failures_above) / static_cast<double>(d.above);
        if (d.failures > 0) d.recall = static_cast<double>(d.failures_above) / static_cast<double>(d.failures);
        out.push_back(d);
    }
    return out;
}

double jaccard(const std::vector<bool>& a, const std::vector<bool>& b) {
    if (a.size() != b.size()) throw AnalysisError(AnalysisErrc::LengthMismatch, "failure vectors differ in length");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += a[i] && b[i];
        uni += a[i] || b[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

std::vector<double> as_doubles(const std::vector<bool>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] ? 1.0 : 0.0;
    return out;
}

}  // namespace

Decorrelation failure_decorrelation(const std::map<std::string, std::vector<bool>>& failures) {
    Decorrelation d;
    for (const auto& [a, va] : failures) {
        for (const auto& [b, vb] : failures) {
            if (va.size() != vb.size()) throw AnalysisError(AnalysisErrc::LengthMismatch, a + " vs " + b);
            auto r = stats::pearson(as_doubles(va), as_doubles(vb));
            if (a == b && r) r = 1.0;
            d.pearson[a][b] = r;
            d.jaccard[a][b] = jaccard(va, vb);
        }
    }
    return d;
}

EnsembleResult ensemble_oracle(const std::map<std::string, std::vector<double>>& scores,
                               const std::vector<std::string>& subset) {
    if (subset.empty()) throw AnalysisError(AnalysisErrc::EmptySubset, "ensemble subset is empty");
    std::size_t n = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        auto it = scores.find(subset[i]);
        if (it == scores.end()) throw AnalysisError(AnalysisErrc::MissingSystem, subset[i]);
        if (i == 0) n = it->second.size();
        if (it->second.size() != n) throw AnalysisError(AnalysisErrc::LengthMismatch, subset[i]);
    }
    EnsembleResult r;
    r.subset = subset;
    if (n == 0) return r;
    for (std::size_t q = 0; q < n; ++q) {
        double best = -1;
        for (const auto& s : subset) best = std::max(best, scores.at(s)[q]);
        r.mean_score += best;
        r.fail_rate += best <= kCollapseThreshold;
        r.perfect_rate += best >= 50;
    }
    r.mean_score /= static_cast<double>(n);
    r.fail_rate /= static_cast<double>(n);
    r.perfect_rate /= static_cast<double>(n);
    return r;
}

CostModel CostModel::defaults() {
    CostModel m;
    m.prices = {{"gpt-5.2", {1.75, 14.00, true}},
                {"gpt-4.1-mini", {0.40, 1.60, false}},
                {"kimi-k2-thinking", {1.20, 4.00, true}},
                {"mistral-small-24b", {0.10, 0.30, false}},
                {"mixtral-8x7b", {0.60, 0.60, false}},
                {"gpt-4o-mini", {0.15, 0.60, false}},
                {"mock-llm", {0.0, 0.0, false}}};
    m.budget = {2000, 250, 1000};
    m.category_reasoning_scale = {
        {"SIMPLE", 1.0}, {"SINGLE_HOP", 1.3}, {"MULTI_HOP", 2.0}, {"GUIDED", 2.5}, {"UNANSWERABLE", 1.5}};
    return m;
}

double cost_estimate(const CostModel& model, const std::string& model_name, const std::string& system,
                     const std::string& category) {
    auto p = model.prices.find(model_name);
    if (p == model.prices.end()) throw AnalysisError(AnalysisErrc::MissingPrice, "no price for model " + model_name);
    auto m = model.multipliers.find(system);
    if (m == model.multipliers.end()) throw AnalysisError(AnalysisErrc::MissingSystem, "no call multiplier for " + system);
    const auto& price = p->second;
    double tokens_cost = model.budget.input * price.input_per_m + model.budget.output * price.output_per_m;
    if (price.reasoning) {
        auto s = model.category_reasoning_scale.find(category);
        const double scale = s == model.category_reasoning_scale.end() ? 1.0 : s->second;
        tokens_cost += model.budget.reasoning * scale * price.output_per_m;
    }
    return m->second * (tokens_cost / 1e6);
}

QuestionFeatures question_features(const std::string& question, const std::string& gold) {
    static const std::set<std::string> kTemporal = {
        "year",    "years",    "month",   "months",    "date",     "dates",   "when",    "january",
        "february", "march",   "april",   "may",       "june",     "july",    "august",  "september",
        "october", "november", "december", "recent",   "recently", "first",   "last",    "since"};
    static const std::regex kYear(R"((^|[^0-9])(19|20)[0-9]{2}([^0-9]|$))");
    QuestionFeatures f;
    const auto toks = text::normalize_tokens(question);
    f.word_count = static_cast<double>(text::word_count(question));
    f.gold_words = static_cast<double>(text::word_count(gold));
    for (const auto& t : toks) {
        if (t == "and" || t == "or" || t == "all") f.multi_entity = 1;
        if (t == "which") f.has_which = 1;
        if (kTemporal.count(t)) f.temporal = 1;
    }
    for (std::size_t i = 0; i + 1 < toks.size(); ++i)
        if (toks[i] == "how" && toks[i + 1] == "many") f.has_how_many = 1;
    if (std::regex_search(question, kYear)) f.temporal = 1;
    return f;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> kNames = {"word_count", "multi_entity", "gold_words",
                                                    "has_which",  "has_how_many", "temporal"};
    return kNames;
}

NullableMatrix feature_failure_correlation(const std::vector<QuestionFeatures>& features,
                                           const std::map<std::string, std::vector<bool>>& failures) {
    std::vector<std::vector<double>> cols(6);
    for (const auto& f : features) {
        cols[0].push_back(f.word_count);
        cols[1].push_back(f.multi_entity);
        cols[2].push_back(f.gold_words);
        cols[3].push_back(f.has_which);
        cols[4].push_back(f.has_how_many);
        cols[5].push_back(f.temporal);
    }
    NullableMatrix out;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (const auto& [sys, fails] : failures) {
            if (fails.size() != features.size()) throw AnalysisError(AnalysisErrc::LengthMismatch, sys);
            out[feature_names()[i]][sys] = stats::pearson(cols[i], as_doubles(fails));
        }
    }
    return out;
}

}  // namespace ctirag::analysis
