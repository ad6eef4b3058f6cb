#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ctirag/llm/mock.hpp"
#include "ctirag/scoring/judge.hpp"
#include "ctirag/scoring/metrics.hpp"

using namespace ctirag;
using namespace ctirag::scoring;
using nlohmann::json;

namespace {

std::vector<double> bow(const std::string& s) { return llm::hashed_bow_embedding(s, 256); }

std::shared_ptr<llm::ScriptedMock> judge_mock(std::vector<std::string> replies, std::string responder = "") {
    llm::ScriptEntry e;
    e.role = llm::PromptRole::Judge;
    for (auto& r : replies) e.responses.push_back({std::move(r), std::nullopt, 0});
    e.responder = std::move(responder);
    return std::make_shared<llm::ScriptedMock>(std::vector<llm::ScriptEntry>{e});
}

std::string scores_reply(const std::vector<std::array<int, 4>>& rows) {
    const char* names[] = {"RAG", "GRAG", "AGRAG", "HRAG"};
    json s = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i)
        s.push_back({{"system", names[i]}, {"c1", rows[i][0]}, {"c2", rows[i][1]}, {"c3", rows[i][2]}, {"c4", rows[i][3]}});
    return json{{"scores", s}}.dump();
}

std::vector<Candidate> four(const std::string& a = "x", const std::string& b = "y", const std::string& c = "z",
                            const std::string& d = "w") {
    return {{"RAG", a}, {"GRAG", b}, {"AGRAG", c}, {"HRAG", d}};
}

JudgeScore js(int c1, int c2, int c3, int c4) {
    JudgeScore s;
    s.c1 = c1;
    s.c2 = c2;
    s.c3 = c3;
    s.c4 = c4;
    return s;
}

// Textbook Pearson written out independently of the library.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST(TokenF1, Examples) {
    EXPECT_DOUBLE_EQ(token_f1("LockBit ransomware", "lockbit Ransomware!"), 1.0);
    EXPECT_DOUBLE_EQ(token_f1("alpha", "beta"), 0.0);
    EXPECT_NEAR(token_f1("CVE 2022 41128", "CVE 2022 41128 exploited"), 6.0 / 7.0, 1e-12);
    EXPECT_DOUBLE_EQ(token_f1("", ""), 1.0);
    EXPECT_DOUBLE_EQ(token_f1("", "x"), 0.0);
    EXPECT_DOUBLE_EQ(token_f1("x", ""), 0.0);
    // Clipped counts: "a a a" vs "a b": overlap 1, P=1/3, R=1/2.
    EXPECT_NEAR(token_f1("a a a", "a b"), 2 * (1.0 / 3) * 0.5 / (1.0 / 3 + 0.5), 1e-12);
}

TEST(Rouge, Examples) {
    EXPECT_DOUBLE_EQ(rouge1("APT29 uses WellMess", "APT29 uses WellMess"), 1.0);
    EXPECT_DOUBLE_EQ(rouge_l("APT29 uses WellMess", "APT29 uses WellMess"), 1.0);
    EXPECT_NEAR(rouge_l("a b c", "a x c"), 2.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(rouge_l("c b a", "a b c"), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(rouge1("", "x"), 0.0);
    EXPECT_DOUBLE_EQ(rouge_l("", "x"), 0.0);
}

TEST(Bleu, HandComputedValues) {
    EXPECT_DOUBLE_EQ(bleu("a b c d", "a b c d"), 1.0);
    EXPECT_DOUBLE_EQ(bleu("", "a"), 0.0);
    EXPECT_DOUBLE_EQ(bleu("x y", "a b"), 0.0);
    // p1 = 3/4, p2 = (1+1)/(3+1), p3 = (0+1)/(2+1), p4 = (0+1)/(1+1); BP = 1.
    EXPECT_NEAR(bleu("a b x d", "a b c d"), std::pow(0.75 * 0.5 * (1.0 / 3) * 0.5, 0.25), 1e-12);
    // Every smoothed precision is 1; BP = exp(1 - 4/3).
    EXPECT_NEAR(bleu("a b c", "a b c d"), std::exp(1.0 - 4.0 / 3.0), 1e-12);
}

TEST(Semsim, IdentityAndDisjoint) {
    EXPECT_NEAR(semsim("LockBit targets healthcare", "lockbit targets healthcare", bow), 1.0, 1e-12);
    EXPECT_NEAR(semsim("alpha beta", "gamma delta", bow), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(semsim("", "", bow), 1.0);
    EXPECT_DOUBLE_EQ(semsim("", "a", bow), 0.0);
    auto negative = [](const std::string& s) { return std::vector<double>{s == "up" ? 1.0 : -1.0, 0.0}; };
    EXPECT_DOUBLE_EQ(semsim("up", "down", negative), 0.0);
}

TEST(Composite, MeanOfFive) {
    EXPECT_DOUBLE_EQ(composite({1, 1, 1, 1, 1}), 1.0);
    EXPECT_DOUBLE_EQ(composite({0, 0, 0, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(composite({0.5, 0.25, 0.5, 0.5, 0.75}), 0.5);
    EXPECT_THROW(composite({1.5, 0, 0, 0, 0}), ScoringError);
    EXPECT_THROW(composite({std::nan(""), 0, 0, 0, 0}), ScoringError);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 1000; ++i) {
        std::array<double, 5> v{u(rng), u(rng), u(rng), u(rng), u(rng)};
        EXPECT_NEAR(composite(v), (v[0] + v[1] + v[2] + v[3] + v[4]) / 5.0, 1e-12);
        std::array<double, 5> same;
        same.fill(v[0]);
        EXPECT_NEAR(composite(same), v[0], 1e-15);
    }
}

TEST(Metrics, IdentityIsOneAndDisjointIsZero) {
    auto m = compute_metrics("APT37 exploited CVE-2022-41128", "APT37 exploited CVE-2022-41128", bow);
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
    EXPECT_DOUBLE_EQ(m.bleu, 1.0);
    EXPECT_DOUBLE_EQ(m.rouge1, 1.0);
    EXPECT_DOUBLE_EQ(m.rougeL, 1.0);
    EXPECT_NEAR(m.semsim, 1.0, 1e-12);
    EXPECT_NEAR(m.composite, 1.0, 1e-12);
    auto z = compute_metrics("alpha beta", "gamma delta", bow);
    EXPECT_DOUBLE_EQ(z.composite, 0.0);
    auto back = metrics_from_json(to_json(m));
    EXPECT_DOUBLE_EQ(back.composite, m.composite);
}

TEST(WeightedTotal, ExhaustiveGrid) {
    int max_hits = 0;
    for (int a = 0; a <= 5; ++a)
        for (int b = 0; b <= 5; ++b)
            for (int c = 0; c <= 5; ++c)
                for (int d = 0; d <= 5; ++d) {
                    const int t = weighted_total(a, b, c, d);
                    EXPECT_EQ(t, 4 * a + 3 * b + 2 * c + d);
                    EXPECT_GE(t, 0);
                    EXPECT_LE(t, 50);
                    if (t == 50) {
                        ++max_hits;
                        EXPECT_TRUE(a == 5 && b == 5 && c == 5 && d == 5);
                    }
                }
    EXPECT_EQ(max_hits, 1);
    EXPECT_EQ(weighted_total(4, 3, 2, 5), 34);
    EXPECT_THROW(weighted_total(6, 0, 0, 0), ScoringError);
    EXPECT_THROW(weighted_total(0, -1, 0, 0), ScoringError);
}

TEST(Judge, LocalTotalsAndTiedRanks) {
    auto mock = judge_mock({scores_reply({{5, 5, 5, 5}, {5, 5, 5, 5}, {5, 5, 5, 5}, {5, 5, 5, 5}})});
    llm::Gateway gw(mock);
    auto s = judge("q", "gold", four(), gw);
    ASSERT_EQ(s.size(), 4u);
    for (const auto& x : s) {
        EXPECT_EQ(x.weighted_total, 50);
        EXPECT_DOUBLE_EQ(x.rank, 2.5);
    }
}

TEST(Judge, IgnoresReportedTotalAndRanksByLocalTotal) {
    json reply = json::parse(scores_reply({{4, 3, 2, 5}, {5, 5, 5, 5}, {0, 0, 0, 0}, {4, 3, 2, 5}}));
    for (auto& r : reply["scores"]) r["total"] = 1;
    llm::Gateway gw(judge_mock({reply.dump()}));
    auto s = judge("q", "gold", four(), gw);
    EXPECT_EQ(s[0].weighted_total, 34);
    EXPECT_EQ(s[1].weighted_total, 50);
    EXPECT_DOUBLE_EQ(s[1].rank, 1.0);
    EXPECT_DOUBLE_EQ(s[0].rank, 2.5);
    EXPECT_DOUBLE_EQ(s[3].rank, 2.5);
    EXPECT_DOUBLE_EQ(s[2].rank, 4.0);
}

TEST(Judge, RefusalRuleOnUnanswerableGold) {
    llm::Gateway gw(judge_mock({scores_reply({{0, 0, 0, 1}, {0, 0, 0, 0}, {1, 1, 1, 1}, {0, 0, 0, 0}})}));
    auto s = judge("What CVSS score is recorded for CVE-2024-21338?", "",
                   four("9.1", "", "x", std::string(llm::kRefusalPhrase)), gw);
    EXPECT_TRUE(s[3].refusal_rule);
    EXPECT_GE(s[3].weighted_total, 45);
    EXPECT_FALSE(s[0].refusal_rule);
    EXPECT_EQ(s[0].weighted_total, 1);
}

TEST(Judge, ReAsksOnceThenFails) {
    auto bad = json{{"scores", json::array({{{"system", "RAG"}, {"c1", 9}, {"c2", 0}, {"c3", 0}, {"c4", 0}}})}}.dump();
    auto good = scores_reply({{1, 1, 1, 1}, {2, 2, 2, 2}, {3, 3, 3, 3}, {4, 4, 4, 4}});
    llm::Gateway ok(judge_mock({bad, good}));
    EXPECT_EQ(judge("q", "g", four(), ok)[3].weighted_total, 40);
    EXPECT_EQ(ok.call_count(), 2u);

    llm::Gateway fail(judge_mock({bad, bad}));
    try {
        judge("q", "g", four(), fail);
        FAIL();
    } catch (const ScoringError& e) {
        EXPECT_EQ(e.code(), ScoringErrc::JudgeParse);
    }
    llm::Gateway prose(judge_mock({"great answers", "still prose"}));
    EXPECT_THROW(judge("q", "g", four(), prose), ScoringError);
}

TEST(Judge, RankLabelInvariance) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> c(0, 5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<JudgeScore> s(4);
        for (auto& x : s) x = js(c(rng), c(rng), c(rng), c(rng));
        std::vector<Candidate> cands = four();
        auto base = s;
        finalize_scores(base, "g", cands);
        std::vector<int> perm = {0, 1, 2, 3};
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<JudgeScore> p(4);
        for (int i = 0; i < 4; ++i) p[i] = s[perm[i]];
        finalize_scores(p, "g", cands);
        for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i].rank, base[perm[i]].rank);
    }
}

TEST(Judge, HeuristicResponderEndToEnd) {
    llm::Gateway gw(judge_mock({}, "heuristic_judge"));
    auto s = judge("Which CVE was exploited in the APT37 Internet Explorer incident?", "CVE-2022-41128",
                   four("CVE-2022-41128", "", std::string(llm::kRefusalPhrase), "The incident used CVE-2022-41128."), gw);
    EXPECT_EQ(s[0].weighted_total, 50);
    EXPECT_LE(s[1].weighted_total, 10);
    EXPECT_LE(s[0].rank, 1.5);
    EXPECT_GE(s[2].rank, 3.0);
}

TEST(CriterionCorrelations, MatchesOracle) {
    std::vector<JudgeScore> dup;
    for (int i = 0; i < 6; ++i) dup.push_back(js(i % 6, i % 6, 5 - i % 6, (i * 7) % 6));
    auto m = criterion_correlations(dup);
    EXPECT_NEAR(m[0][1], 1.0, 1e-12);
    EXPECT_NEAR(m[0][2], -1.0, 1e-12);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(m[i][i], 1.0);

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> c(0, 5);
    for (int t = 0; t < 20; ++t) {
        std::vector<JudgeScore> s(6);
        for (auto& x : s) x = js(c(rng), c(rng), c(rng), c(rng));
        std::array<std::vector<double>, 4> cols;
        for (const auto& x : s) {
            cols[0].push_back(x.c1);
            cols[1].push_back(x.c2);
            cols[2].push_back(x.c3);
            cols[3].push_back(x.c4);
        }
        bool constant = false;
        for (const auto& col : cols) constant |= std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; });
        if (constant) {
            EXPECT_THROW(criterion_correlations(s), ScoringError);
            continue;
        }
        auto r = criterion_correlations(s);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                EXPECT_DOUBLE_EQ(r[i][j], r[j][i]);
                if (i != j) {
                    EXPECT_NEAR(r[i][j], pearson_oracle(cols[i], cols[j]), 1e-12);
                }
            }
    }
    std::vector<JudgeScore> flat(3, js(1, 2, 3, 4));
    EXPECT_THROW(criterion_correlations(flat), ScoringError);
}
