#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "ctirag/cypher/executor.hpp"
#include "ctirag/llm/mock.hpp"
#include "ctirag/llm/responders.hpp"
#include "ctirag/pipelines/pipelines.hpp"

using namespace ctirag;
using namespace ctirag::pipelines;
using llm::PromptRole;
using llm::ScriptEntry;
using llm::ScriptedMock;
using nlohmann::json;

namespace {

const char* kStatements =
    "MERGE (a:ThreatActor {name: 'APT37'});\n"
    "MERGE (c:CVE {name: 'CVE-2022-41128', product: 'Internet Explorer'});\n"
    "MERGE (v:CVE {name: 'CVE-2024-21338', product: 'Windows'});\n"
    "MERGE (m:Malware {name: 'RokRAT'});\n"
    "MERGE (a:ThreatActor {name: 'APT37'}) MERGE (c:CVE {name: 'CVE-2022-41128'}) MERGE (a)-[:exploits]->(c);\n"
    "MERGE (a:ThreatActor {name: 'APT37'}) MERGE (m:Malware {name: 'RokRAT'}) MERGE (a)-[:uses]->(m);\n";

const std::string kGood = "MATCH (a:ThreatActor {name: 'APT37'})-[:exploits]->(c:CVE) RETURN c.name AS cve";
const std::string kBadRel = "MATCH (a:ThreatActor {name: 'APT37'})-[:EXPLOIT]->(c:CVE) RETURN c.name AS cve";
const std::string kBadLabel = "MATCH (a:Nope) RETURN a.name AS n";
const std::string kEmpty = "MATCH (c:CVE {name: 'CVE-1999-0001'}) RETURN c.product AS product";
const std::string kQuestion = "Which CVE was exploited in the APT37 Internet Explorer incident?";

const graph::PropertyGraph& test_graph() {
    static const graph::PropertyGraph g = llm::scratch_graph(kStatements);
    return g;
}

ScriptEntry scripted(PromptRole role, std::vector<std::string> texts, std::string responder = "",
                     double latency = -1) {
    ScriptEntry e;
    e.role = role;
    for (auto& t : texts) {
        llm::ScriptedResponse r;
        r.text = std::move(t);
        e.responses.push_back(std::move(r));
    }
    e.responder = std::move(responder);
    if (latency >= 0) e.latency_s = latency;
    return e;
}

ScriptEntry responder(PromptRole role, const std::string& name, json params = json::object()) {
    ScriptEntry e = scripted(role, {}, name);
    e.params = std::move(params);
    return e;
}

std::string critique(const std::string& verdict, const std::string& cypher) {
    return json{{"verdict", verdict}, {"cypher", cypher}, {"comment", "x"}}.dump();
}

struct Env {
    std::shared_ptr<ScriptedMock> mock;
    llm::Gateway gw;
    explicit Env(std::vector<ScriptEntry> entries)
        : mock(std::make_shared<ScriptedMock>(std::move(entries))), gw(mock) {}
};

std::vector<retrieval::SearchDoc> searchdocs(llm::Gateway& gw) {
    auto docs = retrieval::build_searchdocs(test_graph());
    retrieval::embed_searchdocs(docs, [&](const std::vector<std::string>& t) { return gw.embed(t); });
    return docs;
}

json strip_latency(json j) {
    j.erase("latency_s");
    return j;
}

}  // namespace

TEST(Rag, AnswerFromChunkContainingGold) {
    Env env({responder(PromptRole::AnswerRag, "extractive_answer")});
    auto chunks = retrieval::chunk_text(
        "r1",
        "LockBit ransomware hit hospitals across Europe during the spring. APT37 exploited CVE-2022-41128 in "
        "Internet Explorer through a crafted document about the Itaewon tragedy. RokRAT was delivered later.");
    retrieval::embed_chunks(chunks, [&](const std::vector<std::string>& t) { return env.gw.embed(t); });
    auto a = run_rag(kQuestion, chunks, env.gw);
    EXPECT_NE(a.answer_text.find("CVE-2022-41128"), std::string::npos);
    EXPECT_FALSE(a.is_refusal);
    EXPECT_EQ(a.llm_calls, 1u);
    EXPECT_EQ(env.gw.call_count(), 1u);
    EXPECT_LE(a.retrieved_context["chunks"].size(), 3u);
}

TEST(Rag, EmptyIndexRefuses) {
    Env env({responder(PromptRole::AnswerRag, "refuse")});
    auto a = run_rag(kQuestion, {}, env.gw);
    EXPECT_TRUE(a.is_refusal);
    EXPECT_EQ(a.answer_text, llm::kRefusalPhrase);
    EXPECT_EQ(a.llm_calls, 1u);
}

TEST(Rag, ProviderErrorBecomesFailedAnswer) {
    Env env({});
    auto a = run_rag(kQuestion, {}, env.gw);
    EXPECT_EQ(a.llm_calls, 1u);
    EXPECT_TRUE(a.answer_text.empty());
    EXPECT_NE(a.error.find("MockExhausted"), std::string::npos);
}

TEST(Grag, ValidFirstQuery) {
    Env env({scripted(PromptRole::GenCypher, {kGood})});
    llm::Guardrail guard;
    auto a = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
    EXPECT_EQ(a.iterations, 1);
    EXPECT_EQ(a.answer_text, "CVE-2022-41128");
    EXPECT_FALSE(a.exhausted);
    EXPECT_EQ(a.llm_calls, 1u);
}

TEST(Grag, TwentyFiveInvalidQueriesExhaustTheLoop) {
    Env env({scripted(PromptRole::GenCypher, std::vector<std::string>(25, kBadLabel))});
    llm::Guardrail guard;
    auto a = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
    EXPECT_EQ(a.iterations, 25);
    EXPECT_TRUE(a.exhausted);
    EXPECT_TRUE(a.answer_text.empty());
    EXPECT_FALSE(a.is_refusal);
    EXPECT_EQ(env.gw.call_count(), 25u);
    EXPECT_EQ(env.mock->remaining(0), 0u);
    EXPECT_EQ(a.cypher_trace.size(), 25u);
    EXPECT_NE(a.error.find("LoopExhausted"), std::string::npos);
}

TEST(Grag, InvalidThenValid) {
    Env env({scripted(PromptRole::GenCypher, {kBadRel, kGood})});
    llm::Guardrail guard;
    auto a = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
    EXPECT_EQ(a.iterations, 2);
    EXPECT_EQ(a.answer_text, "CVE-2022-41128");
    EXPECT_EQ(a.cypher_trace[0].failure, "schema");
}

TEST(Grag, EmptyResultTriggersRetry) {
    Env env({scripted(PromptRole::GenCypher, {kEmpty, kGood})});
    llm::Guardrail guard;
    auto a = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
    EXPECT_EQ(a.iterations, 2);
    EXPECT_EQ(a.cypher_trace[0].failure, "empty");
}

TEST(Grag, GuardrailRejectIsImmediateRefusal) {
    Env env({});
    llm::Guardrail guard;
    auto a = run_grag("What's a good pasta recipe?", test_graph(), {}, env.gw, guard);
    EXPECT_TRUE(a.is_refusal);
    EXPECT_EQ(a.iterations, 0);
    EXPECT_EQ(env.gw.call_count(), 0u);
}

TEST(Grag, FeedbackCarriesPriorFailures) {
    auto mock = std::make_shared<ScriptedMock>();
    std::vector<std::string> seen;
    mock->register_responder("capture", [&](const json& in, const json&, const llm::LlmRequest&) {
        seen.push_back(in.value("feedback", ""));
        return seen.size() < 3 ? kBadRel : kGood;
    });
    mock->add(responder(PromptRole::GenCypher, "capture"));
    llm::Gateway gw(mock);
    llm::Guardrail guard;
    auto a = run_grag(kQuestion, test_graph(), {}, gw, guard);
    ASSERT_EQ(seen.size(), 3u);
    EXPECT_TRUE(seen[0].empty());
    EXPECT_NE(seen[1].find("Attempt 1"), std::string::npos);
    EXPECT_NE(seen[2].find("Attempt 2"), std::string::npos);
    EXPECT_NE(seen[1].find("did you mean exploits?"), std::string::npos);
    EXPECT_EQ(a.iterations, 3);
}

TEST(Grag, BudgetBoundsLatency) {
    auto mock = std::make_shared<ScriptedMock>();
    auto e = responder(PromptRole::GenCypher, "constant", {{"text", kBadLabel}});
    e.latency_s = 10.0;
    mock->add(e);
    llm::Gateway gw(mock);
    llm::Guardrail guard;
    PipelineConfig cfg;
    cfg.budget_s = 120;
    auto a = run_grag(kQuestion, test_graph(), {}, gw, guard, cfg);
    EXPECT_TRUE(a.budget_hit);
    EXPECT_FALSE(a.exhausted);
    EXPECT_EQ(a.iterations, 12);
    EXPECT_LT(a.latency_s, cfg.budget_s + 10.0);
    EXPECT_TRUE(a.answer_text.empty());
}

TEST(Agrag, ApproveKeepsGragAnswer) {
    Env env({scripted(PromptRole::GenCypher, {kGood}), responder(PromptRole::CritiqueCypher, "critique")});
    llm::Guardrail guard;
    auto g = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
    auto a = run_agrag(kQuestion, test_graph(), g, env.gw);
    EXPECT_EQ(a.iterations, 1);
    EXPECT_EQ(a.answer_text, g.answer_text);
    EXPECT_EQ(a.llm_calls, g.llm_calls + 1);
    EXPECT_GE(a.latency_s, g.latency_s);
}

TEST(Agrag, CritiqueRepairsBadRelationshipInOnePass) {
    auto bad = responder(PromptRole::GenCypher, "constant", {{"text", kBadRel}});
    Env env({bad, responder(PromptRole::CritiqueCypher, "critique")});
    llm::Guardrail guard;
    auto g = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
    ASSERT_TRUE(g.exhausted);
    EXPECT_EQ(g.iterations, 25);
    auto a = run_agrag(kQuestion, test_graph(), g, env.gw);
    EXPECT_EQ(a.iterations, 1);
    EXPECT_EQ(a.answer_text, "CVE-2022-41128");
    EXPECT_EQ(a.cypher_trace.back().source, "critique");
}

TEST(Agrag, SixFailedRefinementsExhaust) {
    Env env({scripted(PromptRole::GenCypher, {kGood}),
             scripted(PromptRole::CritiqueCypher, std::vector<std::string>(6, critique("refine", kBadLabel)))});
    llm::Guardrail guard;
    auto g = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
    auto a = run_agrag(kQuestion, test_graph(), g, env.gw);
    EXPECT_EQ(a.iterations, 6);
    EXPECT_TRUE(a.exhausted);
    EXPECT_TRUE(a.answer_text.empty());
    EXPECT_NE(a.error.find("LoopExhausted"), std::string::npos);
}

TEST(Agrag, CannotAnswerIsRefusal) {
    auto mock = std::make_shared<ScriptedMock>();
    mock->add(responder(PromptRole::GenCypher, "constant", {{"text", kEmpty}}));
    mock->add(scripted(PromptRole::CritiqueCypher, {critique("cannot_answer", "")}));
    llm::Gateway gw(mock);
    llm::Guardrail guard;
    PipelineConfig cfg;
    cfg.grag_max_iters = 2;
    auto g = run_grag(kQuestion, test_graph(), {}, gw, guard, cfg);
    auto a = run_agrag(kQuestion, test_graph(), g, gw, cfg);
    EXPECT_TRUE(a.is_refusal);
    EXPECT_EQ(a.answer_text, llm::kRefusalPhrase);
    EXPECT_EQ(a.iterations, 1);
}

TEST(Hrag, GraphEmptyTextAnswers) {
    Env env({scripted(PromptRole::GenCypher, {kEmpty}), responder(PromptRole::SynthesizeHybrid, "synthesize")});
    llm::Guardrail guard;
    auto docs = searchdocs(env.gw);
    auto a = run_hrag("Which product does CVE-2022-41128 affect?", test_graph(), docs, env.gw, guard);
    EXPECT_FALSE(a.is_refusal);
    EXPECT_NE(a.answer_text.find("Internet Explorer"), std::string::npos);
    EXPECT_EQ(a.cypher_trace.size(), 1u);
    EXPECT_EQ(a.cypher_trace[0].row_count, 0u);
    EXPECT_FALSE(a.retrieved_context["text"].empty());
    EXPECT_EQ(a.iterations, 1);
}

TEST(Hrag, BothBranchesEmptyRefuses) {
    Env env({scripted(PromptRole::GenCypher, {kEmpty})});
    llm::Guardrail guard;
    auto a = run_hrag("What CVSS score is recorded for CVE-2024-21338?", test_graph(), {}, env.gw, guard);
    EXPECT_TRUE(a.is_refusal);
    EXPECT_EQ(a.answer_text, llm::kRefusalPhrase);
    EXPECT_EQ(env.gw.call_count(), 1u);
}

TEST(Hrag, SynthesisPromptPutsGraphBeforeText) {
    auto mock = std::make_shared<ScriptedMock>();
    std::string prompt;
    mock->register_responder("capture", [&](const json&, const json&, const llm::LlmRequest& r) {
        prompt = r.prompt;
        return std::string("CVE-2022-41128");
    });
    mock->add(scripted(PromptRole::GenCypher, {kGood}));
    mock->add(responder(PromptRole::SynthesizeHybrid, "capture"));
    llm::Gateway gw(mock);
    llm::Guardrail guard;
    auto docs = searchdocs(gw);
    auto a = run_hrag(kQuestion, test_graph(), docs, gw, guard);
    EXPECT_EQ(a.answer_text, "CVE-2022-41128");
    const auto body = prompt.substr(0, prompt.find("<input>"));
    const auto table_pos = body.find("cve\nCVE-2022-41128");
    const auto text_pos = body.find("Text snippets:");
    ASSERT_NE(table_pos, std::string::npos);
    ASSERT_NE(text_pos, std::string::npos);
    EXPECT_LT(table_pos, text_pos);
    EXPECT_NE(body.find("[n", text_pos), std::string::npos);
}

TEST(Hrag, RuleFixesBeforeRepair) {
    Env env({scripted(PromptRole::GenCypher, {"MATCH (c:cve) RETURN c.name"}),
             responder(PromptRole::SynthesizeHybrid, "synthesize")});
    llm::Guardrail guard;
    auto a = run_hrag("List every CVE", test_graph(), {}, env.gw, guard);
    ASSERT_EQ(a.cypher_trace.size(), 2u);
    EXPECT_EQ(a.cypher_trace[1].source, "rule_fix");
    EXPECT_EQ(a.cypher_trace[1].query, "MATCH (c:CVE) RETURN c.name AS name LIMIT 50");
    EXPECT_EQ(a.cypher_trace[1].failure, "none");
    EXPECT_EQ(a.iterations, 1);
    EXPECT_EQ(a.answer_text, "CVE-2022-41128, CVE-2024-21338");
}

TEST(Hrag, OneLlmRepairAfterRules) {
    Env env({scripted(PromptRole::GenCypher, {kBadLabel, kGood}),
             responder(PromptRole::SynthesizeHybrid, "synthesize")});
    llm::Guardrail guard;
    auto a = run_hrag(kQuestion, test_graph(), {}, env.gw, guard);
    EXPECT_EQ(a.iterations, 2);
    EXPECT_EQ(a.cypher_trace.back().source, "repair");
    EXPECT_EQ(a.answer_text, "CVE-2022-41128");
    EXPECT_EQ(a.llm_calls, 3u);
}

TEST(Hrag, RepairFailureIsNotFatal) {
    Env env({scripted(PromptRole::GenCypher, {kBadLabel, kBadLabel}),
             responder(PromptRole::SynthesizeHybrid, "synthesize")});
    llm::Guardrail guard;
    auto docs = searchdocs(env.gw);
    auto a = run_hrag("Which product does CVE-2022-41128 affect?", test_graph(), docs, env.gw, guard);
    EXPECT_EQ(a.iterations, 2);
    EXPECT_NE(a.error.find("graph branch"), std::string::npos);
    EXPECT_NE(a.answer_text.find("Internet Explorer"), std::string::npos);
}

TEST(Hrag, GraphBranchDisabledDegradesToText) {
    Env env({responder(PromptRole::SynthesizeHybrid, "synthesize")});
    llm::Guardrail guard;
    auto docs = searchdocs(env.gw);
    PipelineConfig cfg;
    cfg.hrag_graph_branch = false;
    auto a = run_hrag("Which product does CVE-2022-41128 affect?", test_graph(), docs, env.gw, guard, cfg);
    EXPECT_TRUE(a.error.empty());
    EXPECT_EQ(a.iterations, 0);
    EXPECT_NE(a.answer_text.find("Internet Explorer"), std::string::npos);
}

TEST(RuleFixes, CaseAliasLimitAndLiterals) {
    const auto& onto = graph::Ontology::cti();
    EXPECT_EQ(rule_based_fixes("MATCH (a:threatactor {name: 'x:malware'})-[:USES]->(m:malware) RETURN a.name, count(m)",
                               onto),
              "MATCH (a:ThreatActor {name: 'x:malware'})-[:uses]->(m:Malware) RETURN a.name AS name, count(m) AS "
              "count LIMIT 50");
    EXPECT_EQ(rule_based_fixes("MATCH (a:Malware) RETURN DISTINCT a.name, a.name ORDER BY name LIMIT 3", onto),
              "MATCH (a:Malware) RETURN DISTINCT a.name AS name, a.name AS name_2 ORDER BY name LIMIT 3");
    EXPECT_EQ(rule_based_fixes("```cypher\nMATCH (a:Malware) RETURN a.name AS n LIMIT 2;\n```", onto),
              "MATCH (a:Malware) RETURN a.name AS n LIMIT 2");
    EXPECT_EQ(rule_based_fixes("MATCH (a:Unknown) RETURN a", onto, 0), "MATCH (a:Unknown) RETURN a AS a");
}

TEST(Fewshots, GenerateValidateAndRetrieve) {
    Env env({responder(PromptRole::FewshotPairs, "template_fewshots")});
    auto pairs = generate_fewshots(kStatements, test_graph(), env.gw, 6);
    ASSERT_FALSE(pairs.empty());
    for (const auto& p : pairs) {
        EXPECT_TRUE(cypher::run_read_query(p.cypher, test_graph(), true).succeeded()) << p.cypher;
        EXPECT_FALSE(p.embedding.empty());
    }
    auto q = env.gw.embed({pairs.back().question}).at(0);
    auto near = nearest_fewshots(q, pairs, 3);
    ASSERT_EQ(near.size(), std::min<std::size_t>(3, pairs.size()));
    EXPECT_EQ(near[0].question, pairs.back().question);
    EXPECT_NE(render_fewshots(near).find("Cypher: "), std::string::npos);
}

TEST(Pipelines, DeterministicReplay) {
    auto run_all = [] {
        Env env({responder(PromptRole::FewshotPairs, "template_fewshots"),
                 responder(PromptRole::GenCypher, "fewshot_cypher"), responder(PromptRole::CritiqueCypher, "critique"),
                 responder(PromptRole::SynthesizeHybrid, "synthesize"),
                 responder(PromptRole::AnswerRag, "extractive_answer")});
        llm::Guardrail guard({"cve", "malware"}, {"APT37"});
        auto shots = generate_fewshots(kStatements, test_graph(), env.gw, 8);
        auto docs = searchdocs(env.gw);
        auto chunks = retrieval::chunk_text("r", "APT37 uses RokRAT. APT37 exploits CVE-2022-41128.");
        retrieval::embed_chunks(chunks, [&](const std::vector<std::string>& t) { return env.gw.embed(t); });
        json out = json::array();
        for (const std::string q : {"Which malware does APT37 use?", kQuestion.c_str()}) {
            auto g = run_grag(q, test_graph(), shots, env.gw, guard);
            out.push_back(strip_latency(to_json(run_rag(q, chunks, env.gw))));
            out.push_back(strip_latency(to_json(g)));
            out.push_back(strip_latency(to_json(run_agrag(q, test_graph(), g, env.gw))));
            out.push_back(strip_latency(to_json(run_hrag(q, test_graph(), docs, env.gw, guard))));
        }
        return out;
    };
    auto a = run_all();
    EXPECT_EQ(a, run_all());
    EXPECT_FALSE(a[1]["answer"].get<std::string>().empty());
}

TEST(Pipelines, AnswerJsonRoundTrip) {
    Env env({scripted(PromptRole::GenCypher, {kBadRel, kGood})});
    llm::Guardrail guard;
    auto a = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
    auto j = to_json(a);
    EXPECT_EQ(to_json(answer_from_json(j)), j);
    auto p = FewshotPair{"q", "MATCH (n) RETURN n.name AS n", {0.5, 0.5}};
    EXPECT_EQ(to_json(fewshot_from_json(to_json(p))), to_json(p));
}

TEST(Pipelines, CapsHoldForRandomScripts) {
    std::mt19937_64 rng(3);
    const std::vector<std::string> pool = {kBadLabel, kBadRel, kEmpty, "not cypher at all", kGood};
    llm::Guardrail guard;
    for (int t = 0; t < 40; ++t) {
        std::vector<std::string> gen, crit;
        for (int i = 0; i < 40; ++i) {
            gen.push_back(pool[rng() % 4 + (rng() % 10 == 0)]);
            const int v = static_cast<int>(rng() % 4);
            crit.push_back(v == 0 ? critique("approve", "") : v == 1 ? critique("refine", gen.back())
                                                          : v == 2 ? "garbage" : critique("maybe", ""));
        }
        Env env({scripted(PromptRole::GenCypher, gen), scripted(PromptRole::CritiqueCypher, crit)});
        auto g = run_grag(kQuestion, test_graph(), {}, env.gw, guard);
        EXPECT_LE(g.iterations, 25);
        auto a = run_agrag(kQuestion, test_graph(), g, env.gw);
        EXPECT_LE(a.iterations, 6);
        EXPECT_GE(a.latency_s, 0);
        if (a.is_refusal) {
            EXPECT_EQ(a.answer_text, llm::kRefusalPhrase);
        }
    }
}

TEST(Pipelines, ConcurrentHragSharesGateway) {
    Env env({responder(PromptRole::GenCypher, "constant", {{"text", kGood}}),
             responder(PromptRole::SynthesizeHybrid, "synthesize")});
    llm::Guardrail guard;
    auto docs = searchdocs(env.gw);
    std::vector<PipelineAnswer> out(8);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < out.size(); ++i)
        threads.emplace_back([&, i] { out[i] = run_hrag(kQuestion, test_graph(), docs, env.gw, guard); });
    for (auto& t : threads) t.join();
    for (const auto& a : out) EXPECT_EQ(a.answer_text, "CVE-2022-41128");
    EXPECT_EQ(env.gw.call_count(), 16u);
}
