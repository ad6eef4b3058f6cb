#include "ctirag/analysis/report.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ctirag/common/stats.hpp"
#include "ctirag/scoring/judge.hpp"

namespace ctirag::analysis {

using nlohmann::json;
using scoring::ScoreRecord;

const std::vector<std::string>& system_order() {
    static const std::vector<std::string> kOrder = {"RAG", "GRAG", "AGRAG", "HRAG"};
    return kOrder;
}

namespace {

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string key_of(const ScoreRecord& r) { return std::to_string(r.run) + "/" + r.question_id; }

std::vector<std::string> present_systems(const std::vector<ScoreRecord>& records) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.system);
    std::vector<std::string> out;
    for (const auto& s : system_order())
        if (seen.count(s)) out.push_back(s);
    for (const auto& s : seen)
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    return out;
}

double mean_or_zero(const std::vector<double>& v) { return v.empty() ? 0.0 : stats::mean(v); }
json sd_or_null(const std::vector<double>& v) { return v.size() < 2 ? json(nullptr) : json(stats::sample_sd(v)); }

json profile_json(const FailureProfile& p) {
    return {{"n", p.n},
            {"correct_rate", p.correct_rate},
            {"partial_rate", p.partial_rate},
            {"near_zero_rate", p.near_zero_rate},
            {"hallucination_rate", p.hallucination_rate},
            {"any_hallucination_rate", p.any_hallucination_rate},
            {"full_collapse_rate", p.full_collapse_rate},
            {"collapse_rate", p.collapse_rate},
            {"attack_success_rate", p.attack_success_rate}};
}

std::string csv_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    if (v.is_array()) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ";") + csv_cell(x);
        return s;
    }
    return v.dump();
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<json>>& rows) {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
        os << "\n";
    }
    return os.str();
}

}  // namespace

json build_report(const std::vector<ScoreRecord>& records, const std::map<std::string, QuestionInfo>& questions,
                  const ReportOptions& options) {
    const auto systems = present_systems(records);
    std::set<int> runs;
    std::set<std::string> categories;
    std::map<std::string, std::map<std::string, const ScoreRecord*>> by_key;  // key -> system -> record
    for (const auto& r : records) {
        runs.insert(r.run);
        if (!r.category.empty()) categories.insert(r.category);
        by_key[key_of(r)][r.system] = &r;
    }
    std::vector<std::string> aligned;
    for (const auto& [k, m] : by_key)
        if (m.size() == systems.size()) aligned.push_back(k);

    json report;
    report["format"] = "ctirag-report/1";
    report["meta"] = {{"records", records.size()},
                      {"runs", std::vector<int>(runs.begin(), runs.end())},
                      {"systems", systems},
                      {"questions", by_key.size()},
                      {"aligned_questions", aligned.size()},
                      {"answer_model", options.answer_model},
                      {"judge_model", options.judge_model},
                      {"semsim", "embedding cosine via " +
                                     (options.embedding_model.empty() ? std::string("unknown") : options.embedding_model) +
                                     ", standing in for BERTScore"},
                      {"bootstrap_resamples", options.resamples},
                      {"seed", options.seed}};

    json summary = json::object();
    for (const auto& s : systems) {
        std::vector<double> totals, comp, f1, bl, r1, rl, ss, lat, iters, calls;
        for (const auto& r : records) {
            if (r.system != s) continue;
            totals.push_back(r.judge.weighted_total);
            comp.push_back(r.metrics.composite);
            f1.push_back(r.metrics.f1);
            bl.push_back(r.metrics.bleu);
            r1.push_back(r.metrics.rouge1);
            rl.push_back(r.metrics.rougeL);
            ss.push_back(r.metrics.semsim);
            lat.push_back(r.latency_s);
            iters.push_back(r.iterations);
            calls.push_back(r.llm_calls);
        }
        summary[s] = {{"n", totals.size()},
                      {"judge_mean", mean_or_zero(totals)},
                      {"judge_sd", sd_or_null(totals)},
                      {"composite_mean", mean_or_zero(comp)},
                      {"f1", mean_or_zero(f1)},
                      {"bleu", mean_or_zero(bl)},
                      {"rouge1", mean_or_zero(r1)},
                      {"rougeL", mean_or_zero(rl)},
                      {"semsim", mean_or_zero(ss)},
                      {"latency_mean_s", mean_or_zero(lat)},
                      {"latency_sd_s", sd_or_null(lat)},
                      {"iterations_mean", mean_or_zero(iters)},
                      {"llm_calls_mean", mean_or_zero(calls)}};
    }
    report["summary"] = summary;

    json by_cat = json::object();
    json hall_cat = json::object();
    for (const auto& c : categories) {
        for (const auto& s : systems) {
            std::vector<double> totals;
            std::size_t hall = 0;
            for (const auto& r : records) {
                if (r.system != s || r.category != c) continue;
                totals.push_back(r.judge.weighted_total);
                hall += is_hallucination(r.judge.c3);
            }
            by_cat[c][s] = totals.empty() ? json(nullptr) : json(stats::mean(totals));
            hall_cat[c][s] = totals.empty() ? json(nullptr) : json(static_cast<double>(hall) / static_cast<double>(totals.size()));
        }
    }
    report["by_category"] = by_cat;
    report["hallucination_by_category"] = hall_cat;

    std::map<std::string, std::vector<double>> aligned_totals;
    std::map<std::string, std::vector<bool>> aligned_fail;
    std::map<std::string, std::vector<double>> aligned_latency;
    for (const auto& k : aligned) {
        for (const auto& s : systems) {
            const auto* r = by_key.at(k).at(s);
            aligned_totals[s].push_back(r->judge.weighted_total);
            aligned_fail[s].push_back(is_collapse(r->judge.weighted_total));
            aligned_latency[s].push_back(r->latency_s);
        }
    }

    json deltas = json::array();
    std::uint64_t pair_index = 0;
    for (std::size_t i = 0; i < systems.size(); ++i) {
        for (std::size_t j = i + 1; j < systems.size(); ++j) {
            const auto& a = systems[j];
            const auto& b = systems[i];
            if (aligned.empty()) continue;
            auto d = paired_delta(aligned_totals[a], aligned_totals[b], options.resamples, options.seed + pair_index++);
            deltas.push_back({{"a", a},
                              {"b", b},
                              {"n", d.n},
                              {"mean_delta", d.mean_delta},
                              {"ci_low", d.ci_low},
                              {"ci_high", d.ci_high},
                              {"median_delta", d.median_delta},
                              {"cohens_d", nullable(d.cohens_d)}});
        }
    }
    report["deltas"] = deltas;

    json rates = json::object();
    json refusal = json::object();
    for (const auto& s : systems) {
        std::vector<JudgeCells> cells;
        std::size_t unans = 0, unans_refused = 0, unans_judge = 0, ans = 0, ans_refused = 0;
        for (const auto& r : records) {
            if (r.system != s) continue;
            cells.push_back({r.judge.c1, r.judge.c2, r.judge.c3, r.judge.c4, r.judge.weighted_total});
            if (r.category == "UNANSWERABLE") {
                ++unans;
                unans_refused += r.is_refusal;
                unans_judge += r.judge.refusal_rule;
            } else {
                ++ans;
                ans_refused += r.is_refusal;
            }
        }
        rates[s] = profile_json(classify_rates(cells));
        auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? json(nullptr) : json(static_cast<double>(a) / static_cast<double>(b)); };
        refusal[s] = {{"unanswerable_n", unans},
                      {"correct_refusal_rate", ratio(unans_refused, unans)},
                      {"judge_refusal_rate", ratio(unans_judge, unans)},
                      {"answerable_n", ans},
                      {"false_refusal_rate", ratio(ans_refused, ans)}};
    }
    report["rates"] = rates;
    report["refusal"] = refusal;

    json stab = json::object();
    for (const auto& s : systems) {
        json per = json::object();
        auto run_means_for = [&](const std::string& cat) {
            std::vector<double> means;
            for (int run : runs) {
                std::vector<double> t;
                for (const auto& r : records)
                    if (r.system == s && r.run == run && (cat.empty() || r.category == cat)) t.push_back(r.judge.weighted_total);
                if (!t.empty()) means.push_back(stats::mean(t));
            }
            return means;
        };
        auto cell = [&](const std::vector<double>& means) -> json {
            try {
                auto st = stability(means);
                return {{"run_means", st.run_means}, {"mean", st.mean}, {"sd", st.sd}, {"cv_percent", st.cv_percent}};
            } catch (const AnalysisError& e) {
                return {{"run_means", means}, {"cv_percent", nullptr}, {"error", e.what()}};
            }
        };
        for (const auto& c : categories) per[c] = cell(run_means_for(c));
        per["overall"] = cell(run_means_for(""));
        stab[s] = per;
    }
    report["stability"] = stab;

    json ranks = json::object();
    for (const auto& [s, r] : mean_ranks(aligned_totals))
        ranks[s] = {{"mean_rank", r.mean_rank}, {"sole_best_rate", r.sole_best_rate}, {"best_or_tied_rate", r.best_or_tied_rate}};
    report["ranks"] = ranks;

    json timing = json::object();
    for (const auto& s : systems) {
        const auto& lat = aligned_latency[s];
        const auto& fail = aligned_fail[s];
        std::vector<double> f_lat, ok_lat, fail_d;
        for (std::size_t i = 0; i < lat.size(); ++i) {
            (fail[i] ? f_lat : ok_lat).push_back(lat[i]);
            fail_d.push_back(fail[i] ? 1.0 : 0.0);
        }
        json det = json::array();
        for (const auto& d : timing_detector(lat, fail, options.timing_thresholds))
            det.push_back({{"threshold_s", d.threshold_s},
                           {"above", d.above},
                           {"failures", d.failures},
                           {"failures_above", d.failures_above},
                           {"precision", nullable(d.precision)},
                           {"recall", nullable(d.recall)}});
        timing[s] = {{"failure_mean_latency_s", f_lat.empty() ? json(nullptr) : json(stats::mean(f_lat))},
                     {"success_mean_latency_s", ok_lat.empty() ? json(nullptr) : json(stats::mean(ok_lat))},
                     {"latency_failure_r", nullable(stats::pearson(lat, fail_d))},
                     {"detectors", det}};
    }
    report["timing"] = timing;

    auto dec = failure_decorrelation(aligned_fail);
    json pear = json::object(), jac = json::object();
    for (const auto& [a, row] : dec.pearson)
        for (const auto& [b, v] : row) pear[a][b] = nullable(v);
    for (const auto& [a, row] : dec.jaccard)
        for (const auto& [b, v] : row) jac[a][b] = v;
    report["decorrelation"] = {{"pearson", pear}, {"jaccard", jac}};

    json ens = json::array();
    if (!aligned.empty()) {
        for (std::size_t size = 1; size <= systems.size(); ++size) {
            for (unsigned mask = 1; mask < (1u << systems.size()); ++mask) {
                if (static_cast<std::size_t>(__builtin_popcount(mask)) != size) continue;
                std::vector<std::string> subset;
                for (std::size_t i = 0; i < systems.size(); ++i)
                    if (mask & (1u << i)) subset.push_back(systems[i]);
                auto e = ensemble_oracle(aligned_totals, subset);
                ens.push_back({{"subset", subset}, {"mean_score", e.mean_score}, {"fail_rate", e.fail_rate},
                               {"perfect_rate", e.perfect_rate}});
            }
        }
    }
    report["ensemble"] = ens;

    json cost = json::object();
    std::vector<std::string> cats(categories.begin(), categories.end());
    for (const auto& [model, price] : options.cost.prices) {
        for (const auto& s : systems) {
            if (!options.cost.multipliers.count(s)) continue;
            for (const auto& c : cats) cost["estimates"][model][s][c] = cost_estimate(options.cost, model, s, c);
        }
    }
    json observed = json::object();
    const auto answer_price = options.cost.prices.find(options.answer_model);
    for (const auto& s : systems) {
        std::int64_t in = 0, out = 0, reason = 0;
        std::size_t n = 0;
        for (const auto& r : records) {
            if (r.system != s) continue;
            in += r.input_tokens;
            out += r.output_tokens;
            reason += r.reasoning_tokens;
            ++n;
        }
        json o = {{"answers", n}, {"input_tokens", in}, {"output_tokens", out}, {"reasoning_tokens", reason}};
        if (answer_price != options.cost.prices.end()) {
            const auto& p = answer_price->second;
            o["cost_usd"] = (static_cast<double>(in) * p.input_per_m + static_cast<double>(out + reason) * p.output_per_m) / 1e6;
        } else {
            o["cost_usd"] = nullptr;
        }
        observed[s] = o;
    }
    cost["observed"] = observed;
    cost["multipliers"] = options.cost.multipliers;
    report["cost"] = cost;

    std::vector<QuestionFeatures> feats;
    std::map<std::string, std::vector<bool>> feat_fail;
    for (const auto& k : aligned) {
        auto q = questions.find(k);
        if (q == questions.end()) continue;
        feats.push_back(question_features(q->second.question, q->second.gold));
        for (const auto& s : systems) feat_fail[s].push_back(is_collapse(by_key.at(k).at(s)->judge.weighted_total));
    }
    json features = json::object();
    for (const auto& [f, row] : feature_failure_correlation(feats, feat_fail))
        for (const auto& [s, v] : row) features[f][s] = nullable(v);
    report["features"] = features;

    std::vector<scoring::JudgeScore> all_scores;
    for (const auto& r : records) all_scores.push_back(r.judge);
    try {
        auto m = scoring::criterion_correlations(all_scores);
        json mj = json::array();
        for (const auto& row : m) mj.push_back(std::vector<double>(row.begin(), row.end()));
        report["criterion_correlations"] = mj;
    } catch (const scoring::ScoringError& e) {
        report["criterion_correlations"] = nullptr;
        report["meta"]["criterion_correlations_error"] = e.what();
    }
    return report;
}

std::map<std::string, std::string> report_csvs(const json& report) {
    std::map<std::string, std::string> out;
    {
        std::vector<std::vector<json>> rows;
        for (const auto& [s, v] : report.at("summary").items())
            rows.push_back({s, v["n"], v["judge_mean"], v["judge_sd"], v["composite_mean"], v["f1"], v["bleu"],
                            v["rouge1"], v["rougeL"], v["semsim"], v["latency_mean_s"], v["latency_sd_s"]});
        out["summary.csv"] = csv({"system", "n", "judge_mean", "judge_sd", "composite", "f1", "bleu", "rouge1", "rougeL",
                                  "semsim", "latency_mean_s", "latency_sd_s"},
                                 rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& d : report.at("deltas"))
            rows.push_back({d["a"], d["b"], d["n"], d["mean_delta"], d["ci_low"], d["ci_high"], d["median_delta"], d["cohens_d"]});
        out["deltas.csv"] = csv({"a", "b", "n", "mean_delta", "ci_low", "ci_high", "median_delta", "cohens_d"}, rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& [s, p] : report.at("rates").items())
            rows.push_back({s, p["n"], p["correct_rate"], p["partial_rate"], p["near_zero_rate"], p["hallucination_rate"],
                            p["any_hallucination_rate"], p["full_collapse_rate"], p["collapse_rate"], p["attack_success_rate"]});
        out["rates.csv"] = csv({"system", "n", "correct", "partial", "near_zero", "fluent_hallucination", "hallucination",
                                "full_collapse", "collapse", "attack_success"},
                               rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& [c, row] : report.at("by_category").items())
            for (const auto& [s, v] : row.items()) rows.push_back({c, s, v, report["hallucination_by_category"][c][s]});
        out["by_category.csv"] = csv({"category", "system", "judge_mean", "hallucination_rate"}, rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& [s, per] : report.at("stability").items())
            for (const auto& [c, v] : per.items()) rows.push_back({s, c, v["run_means"], v["cv_percent"]});
        out["stability.csv"] = csv({"system", "category", "run_means", "cv_percent"}, rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& [s, r] : report.at("ranks").items())
            rows.push_back({s, r["mean_rank"], r["sole_best_rate"], r["best_or_tied_rate"]});
        out["ranks.csv"] = csv({"system", "mean_rank", "sole_best_rate", "best_or_tied_rate"}, rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& [s, t] : report.at("timing").items())
            for (const auto& d : t["detectors"])
                rows.push_back({s, d["threshold_s"], d["above"], d["precision"], d["recall"]});
        out["timing.csv"] = csv({"system", "threshold_s", "above", "precision", "recall"}, rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& [a, row] : report.at("decorrelation").at("pearson").items())
            for (const auto& [b, v] : row.items()) rows.push_back({a, b, v, report["decorrelation"]["jaccard"][a][b]});
        out["decorrelation.csv"] = csv({"a", "b", "pearson", "jaccard"}, rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& e : report.at("ensemble"))
            rows.push_back({e["subset"], e["mean_score"], e["fail_rate"], e["perfect_rate"]});
        out["ensemble.csv"] = csv({"subset", "mean_score", "fail_rate", "perfect_rate"}, rows);
    }
    {
        std::vector<std::vector<json>> rows;
        if (report.at("cost").contains("estimates"))
            for (const auto& [m, per] : report["cost"]["estimates"].items())
                for (const auto& [s, cats] : per.items())
                    for (const auto& [c, v] : cats.items()) rows.push_back({m, s, c, v});
        out["cost.csv"] = csv({"model", "system", "category", "cost_usd"}, rows);
    }
    {
        std::vector<std::vector<json>> rows;
        for (const auto& [f, row] : report.at("features").items())
            for (const auto& [s, v] : row.items()) rows.push_back({f, s, v});
        out["features.csv"] = csv({"feature", "system", "pearson"}, rows);
    }
    return out;
}

}  // namespace ctirag::analysis
