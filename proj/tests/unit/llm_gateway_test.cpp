#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "ctirag/common/text.hpp"
#include "ctirag/cypher/executor.hpp"
#include "ctirag/cypher/parser.hpp"
#include "ctirag/llm/gateway.hpp"
#include "ctirag/llm/guardrail.hpp"
#include "ctirag/llm/http_provider.hpp"
#include "ctirag/llm/mock.hpp"
#include "ctirag/llm/prompts.hpp"
#include "ctirag/llm/responders.hpp"

using namespace ctirag;
using namespace ctirag::llm;
using nlohmann::json;

namespace {

ScriptEntry entry(PromptRole role, std::string match, std::vector<std::string> texts, std::string responder = "") {
    ScriptEntry e;
    e.role = role;
    e.match = std::move(match);
    for (auto& t : texts) e.responses.push_back({std::move(t), std::nullopt, 0});
    e.responder = std::move(responder);
    return e;
}

Slots rag_slots(const std::string& q, const std::string& ctx = "ctx") { return {{"question", q}, {"context", ctx}}; }

LlmRequest rag_request(const std::string& prompt) {
    LlmRequest r;
    r.role = PromptRole::AnswerRag;
    r.prompt = prompt;
    r.match_key = "q";
    return r;
}

double dot(const Embedding& a, const Embedding& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

const char* kScript =
    "MERGE (a:ThreatActor {name: 'APT29', first_seen: '2008-01-01'});\n"
    "MERGE (m:Malware {name: 'WellMess', type: 'backdoor'});\n"
    "MERGE (n:Malware {name: 'SUNBURST'});\n"
    "MERGE (s:Sector {name: 'Healthcare'});\n"
    "MERGE (g:Sector {name: 'Government'});\n"
    "MERGE (a:ThreatActor {name: 'APT29'}) MERGE (m:Malware {name: 'WellMess'}) MERGE (a)-[:uses]->(m);\n"
    "MERGE (a:ThreatActor {name: 'APT29'}) MERGE (m:Malware {name: 'SUNBURST'}) MERGE (a)-[:uses]->(m);\n"
    "MERGE (m:Malware {name: 'WellMess'}) MERGE (s:Sector {name: 'Healthcare'}) MERGE (m)-[:targets]->(s);\n"
    "MERGE (m:Malware {name: 'SUNBURST'}) MERGE (s:Sector {name: 'Government'}) MERGE (m)-[:targets]->(s);\n"
    "MERGE (m:Malware {name: 'SUNBURST'}) MERGE (s:Sector {name: 'Healthcare'}) MERGE (m)-[:targets]->(s);\n";

}  // namespace

TEST(Prompts, EveryRoleHasTemplateAndPrimarySlot) {
    EXPECT_EQ(all_roles().size(), 10u);
    for (auto role : all_roles()) {
        auto slots = template_slots(role);
        EXPECT_FALSE(slots.empty()) << to_string(role);
        EXPECT_NE(std::find(slots.begin(), slots.end(), primary_slot(role)), slots.end()) << to_string(role);
        EXPECT_EQ(role_from_string(to_string(role)), role);
    }
    EXPECT_FALSE(role_from_string("NOPE").has_value());
}

TEST(Prompts, MissingSlotRaises) {
    try {
        render_prompt(PromptRole::AnswerRag, {{"question", "q"}});
        FAIL();
    } catch (const LlmError& e) {
        EXPECT_EQ(e.code(), LlmErrc::MissingSlot);
        EXPECT_NE(std::string(e.what()).find("context"), std::string::npos);
    }
}

TEST(Prompts, InputBlockRoundTrips) {
    Slots s = rag_slots("Which CVE?", "line one\n\"quoted\" </input>");
    auto p = render_prompt(PromptRole::AnswerRag, s);
    EXPECT_NE(p.find("Question: Which CVE?"), std::string::npos);
    auto j = input_block(p);
    EXPECT_EQ(j.at("question"), "Which CVE?");
    EXPECT_EQ(j.at("context"), "line one\n\"quoted\" </input>");
}

TEST(Prompts, RefusalDetection) {
    EXPECT_TRUE(is_refusal_text(kRefusalPhrase));
    EXPECT_TRUE(is_refusal_text("There is Insufficient information in the provided context."));
    EXPECT_FALSE(is_refusal_text("CVE-2022-41128"));
    EXPECT_FALSE(is_refusal_text(""));
}

TEST(Mock, RepliesInOrderThenExhausts) {
    auto mock = std::make_shared<ScriptedMock>(
        std::vector<ScriptEntry>{entry(PromptRole::AnswerRag, "*", {"one", "two"})});
    Gateway gw(mock);
    EXPECT_EQ(gw.complete(PromptRole::AnswerRag, rag_slots("q")).text, "one");
    EXPECT_EQ(gw.complete(PromptRole::AnswerRag, rag_slots("q")).text, "two");
    try {
        gw.complete(PromptRole::AnswerRag, rag_slots("q"));
        FAIL();
    } catch (const LlmError& e) {
        EXPECT_EQ(e.code(), LlmErrc::MockExhausted);
    }
    ASSERT_EQ(gw.call_count(), 3u);
    EXPECT_FALSE(gw.call_log()[2].ok);
}

TEST(Mock, UnscriptedRoleExhausts) {
    Gateway gw(std::make_shared<ScriptedMock>());
    try {
        gw.complete(PromptRole::Guardrail, {{"question", "x"}});
        FAIL();
    } catch (const LlmError& e) {
        EXPECT_EQ(e.code(), LlmErrc::MockExhausted);
    }
}

TEST(Mock, SpecificMatchBeatsWildcardRegardlessOfOrder) {
    auto mock = std::make_shared<ScriptedMock>(std::vector<ScriptEntry>{
        entry(PromptRole::AnswerRag, "*", {"generic"}),
        entry(PromptRole::AnswerRag, "apt37", {"specific"}),
    });
    Gateway gw(mock);
    EXPECT_EQ(gw.complete(PromptRole::AnswerRag, rag_slots("Which CVE did APT37 exploit?")).text, "specific");
    EXPECT_EQ(gw.complete(PromptRole::AnswerRag, rag_slots("Something else about malware")).text, "generic");
    EXPECT_EQ(mock->remaining(0), 0u);
    EXPECT_EQ(mock->remaining(1), 0u);
}

TEST(Mock, ResponderTakesOverAfterScriptedReplies) {
    auto e = entry(PromptRole::AnswerRag, "*", {"scripted"}, "constant");
    e.params = {{"text", "fallback"}};
    Gateway gw(std::make_shared<ScriptedMock>(std::vector<ScriptEntry>{e}));
    EXPECT_EQ(gw.complete(PromptRole::AnswerRag, rag_slots("q")).text, "scripted");
    EXPECT_EQ(gw.complete(PromptRole::AnswerRag, rag_slots("q")).text, "fallback");
    EXPECT_EQ(gw.complete(PromptRole::AnswerRag, rag_slots("q")).text, "fallback");
}

TEST(Mock, ScriptDocumentParsing) {
    auto doc = json::parse(R"({"model": "m1", "base_latency_s": 0.25, "latency_per_output_token_s": 0,
        "entries": [{"role": "ANSWER_RAG", "responses": ["a", {"text": "b", "latency_s": 3.0, "reasoning_tokens": 7}]}]})");
    auto mock = ScriptedMock::from_json(doc);
    EXPECT_EQ(mock->model_id(), "m1");
    LlmRequest req = rag_request("p");
    auto r1 = mock->complete(req);
    EXPECT_DOUBLE_EQ(r1.latency_s, 0.25);
    EXPECT_TRUE(r1.simulated_latency);
    auto r2 = mock->complete(req);
    EXPECT_DOUBLE_EQ(r2.latency_s, 3.0);
    EXPECT_EQ(r2.usage.reasoning_tokens, 7);

    EXPECT_THROW(ScriptedMock::from_json(json::parse(R"([{"role": "NOPE", "responses": ["x"]}])")), LlmError);
    EXPECT_THROW(ScriptedMock::from_json(json::parse(R"([{"role": "JUDGE"}])")), LlmError);
    EXPECT_THROW(ScriptedMock::from_json(json::parse(R"([{"role": "JUDGE", "responder": "nope"}])")), LlmError);
}

TEST(Embedding, SameTextIsIdenticalAndDisjointIsOrthogonal) {
    ScriptedMock mock;
    auto v = mock.embed({"LockBit targets healthcare", "LockBit targets healthcare", "weather forecast tomorrow"});
    EXPECT_NEAR(dot(v[0], v[1]), 1.0, 1e-12);
    EXPECT_NEAR(dot(v[0], v[2]), 0.0, 1e-12);
    EXPECT_NEAR(dot(v[0], v[0]), 1.0, 1e-12);
    auto z = hashed_bow_embedding("...", 64);
    EXPECT_TRUE(std::all_of(z.begin(), z.end(), [](double x) { return x == 0.0; }));
}

TEST(Guardrail, AcceptsCtiAndRejectsOffTopic) {
    Guardrail g;
    EXPECT_EQ(g.check("Which CVE was exploited in the APT37 Internet Explorer incident?"), GuardrailVerdict::Accept);
    EXPECT_EQ(g.check("What is the best recipe for pasta carbonara?"), GuardrailVerdict::Reject);
    EXPECT_EQ(g.check(""), GuardrailVerdict::Reject);
    EXPECT_EQ(g.check("   ?! "), GuardrailVerdict::Reject);
    Guardrail with_entities({}, {"Kimsuky"});
    EXPECT_EQ(with_entities.check("Tell me about kimsuky"), GuardrailVerdict::Accept);
}

TEST(StrictJson, AcceptsFencedJsonAndRejectsProse) {
    EXPECT_TRUE(parse_strict_json("{\"a\": 1}"));
    EXPECT_TRUE(parse_strict_json("```json\n{\"a\": 1}\n```"));
    std::string err;
    EXPECT_FALSE(parse_strict_json("Sure! {\"a\": 1}", &err));
    EXPECT_FALSE(err.empty());
}

TEST(StrictJson, OneReAskThenFailure) {
    auto mock = std::make_shared<ScriptedMock>(std::vector<ScriptEntry>{
        entry(PromptRole::Judge, "first", {"not json", "{\"scores\": []}"}),
        entry(PromptRole::Judge, "second", {"nope", "still nope", "{}"}),
    });
    Gateway gw(mock);
    Slots s{{"question", "first"}, {"gold", "g"}, {"candidates", "[]"}};
    EXPECT_EQ(gw.complete_json(PromptRole::Judge, s).at("scores").size(), 0u);
    ASSERT_EQ(gw.call_count(), 2u);
    s["question"] = "second";
    try {
        gw.complete_json(PromptRole::Judge, s);
        FAIL();
    } catch (const LlmError& e) {
        EXPECT_EQ(e.code(), LlmErrc::JsonParse);
    }
    EXPECT_EQ(gw.call_count(), 4u);
    EXPECT_EQ(mock->remaining(1), 1u);
}

TEST(Usage, TotalsEqualSumOfCalls) {
    auto mock = std::make_shared<ScriptedMock>(
        std::vector<ScriptEntry>{entry(PromptRole::AnswerRag, "*", {}, "extractive_answer")});
    Gateway gw(mock);
    for (int i = 0; i < 5; ++i)
        gw.complete(PromptRole::AnswerRag, rag_slots("q" + std::to_string(i), std::string(10 * i, 'x') + " q" + std::to_string(i) + "."));
    Usage sum;
    for (const auto& r : gw.call_log()) {
        EXPECT_GT(r.usage.input_tokens, 0);
        sum.input_tokens += r.usage.input_tokens;
        sum.output_tokens += r.usage.output_tokens;
    }
    EXPECT_EQ(gw.total_usage(), sum);
    EXPECT_EQ(estimate_tokens(""), 0);
    EXPECT_EQ(estimate_tokens("abcd"), 1);
    EXPECT_EQ(estimate_tokens("abcde"), 2);
}

TEST(Usage, ConcurrentCallsAreAllLogged) {
    auto e = entry(PromptRole::AnswerRag, "*", {}, "constant");
    e.params = {{"text", "ok"}};
    Gateway gw(std::make_shared<ScriptedMock>(std::vector<ScriptEntry>{e}));
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&] {
            for (int i = 0; i < 50; ++i) gw.complete(PromptRole::AnswerRag, rag_slots("q"));
        });
    for (auto& t : threads) t.join();
    auto log = gw.call_log();
    ASSERT_EQ(log.size(), 400u);
    std::set<std::uint64_t> seqs;
    for (const auto& r : log) seqs.insert(r.seq);
    EXPECT_EQ(seqs.size(), 400u);
}

TEST(HttpProvider, ParsesCompletionAndRejectsBadKey) {
    httplib::Server srv;
    srv.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        if (req.get_header_value("Authorization") != "Bearer good") {
            res.status = 401;
            res.set_content(R"({"error": {"message": "bad key"}})", "application/json");
            return;
        }
        auto body = json::parse(req.body);
        json reply = {{"model", body.at("model")},
                      {"choices", {{{"message", {{"role", "assistant"}, {"content", "CVE-2022-41128"}}}}}},
                      {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 4},
                                 {"completion_tokens_details", {{"reasoning_tokens", 2}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    srv.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        json data = json::array();
        for (std::size_t i = 0; i < body.at("input").size(); ++i)
            data.push_back({{"index", i}, {"embedding", {1.0 * static_cast<double>(i), 0.5}}});
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread th([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    HttpProviderConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    cfg.api_key = "good";
    cfg.timeout_s = 5;
    HttpProvider ok(cfg);
    auto r = ok.complete(rag_request("prompt"));
    EXPECT_EQ(r.text, "CVE-2022-41128");
    EXPECT_EQ(r.usage.input_tokens, 11);
    EXPECT_EQ(r.usage.output_tokens, 4);
    EXPECT_EQ(r.usage.reasoning_tokens, 2);
    EXPECT_FALSE(r.simulated_latency);
    auto emb = ok.embed({"a", "b"});
    ASSERT_EQ(emb.size(), 2u);
    EXPECT_DOUBLE_EQ(emb[1][0], 1.0);

    cfg.api_key = "bad";
    HttpProvider bad(cfg);
    try {
        bad.complete(rag_request("prompt"));
        FAIL();
    } catch (const LlmError& e) {
        EXPECT_EQ(e.code(), LlmErrc::ProviderError);
        EXPECT_NE(std::string(e.what()).find("401"), std::string::npos);
    }
    srv.stop();
    th.join();
}

TEST(HttpProvider, UnreachableHostIsProviderError) {
    HttpProviderConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.api_key = "k";
    cfg.timeout_s = 2;
    HttpProvider p(cfg);
    try {
        p.complete(rag_request("prompt"));
        FAIL();
    } catch (const LlmError& e) {
        EXPECT_EQ(e.code(), LlmErrc::ProviderError);
    }
}

TEST(Templates, LabelsAndSentences) {
    EXPECT_EQ(human_label("ThreatActor"), "threat actor");
    EXPECT_EQ(human_label("C2_Infrastructure"), "C2 infrastructure");
    EXPECT_EQ(human_label("CVE"), "CVE");
    auto s = split_sentences("APT29 uses WellMess. Version 1.2 is old!\nNew line");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[1], "Version 1.2 is old!");
    EXPECT_EQ(guess_entity("Which CVE was exploited in the APT37 Internet Explorer incident?"), "APT37 Internet Explorer");
}

TEST(Templates, AnswersMatchIndependentGraphWalk) {
    auto g = scratch_graph(kScript);
    ASSERT_EQ(g.node_count(), 5u);
    ASSERT_EQ(g.edge_count(), 5u);
    auto items = template_items(g);
    std::map<std::string, int> cats;
    for (const auto& t : items) cats[t.category]++;
    EXPECT_GT(cats["SIMPLE"], 0);
    EXPECT_GT(cats["SINGLE_HOP"], 0);
    EXPECT_GT(cats["MULTI_HOP"], 0);
    EXPECT_GT(cats["UNANSWERABLE"], 0);

    auto find = [&](const std::string& q) -> const TemplateItem* {
        for (const auto& t : items)
            if (t.question == q) return &t;
        return nullptr;
    };
    auto answer = [&](const TemplateItem& t) {
        return cypher::render_flat(cypher::execute(cypher::parse(t.cypher), g), g);
    };
    // Oracle answers below come from walking the five MERGEd edges by hand.
    const auto* fwd = find("Which malware does APT29 use?");
    ASSERT_TRUE(fwd);
    EXPECT_EQ(answer(*fwd), "SUNBURST, WellMess");
    const auto* rev = find("Which malware targets Healthcare?");
    ASSERT_TRUE(rev);
    EXPECT_EQ(answer(*rev), "SUNBURST, WellMess");
    const auto* m1 = find("Which sector does the malware used by APT29 target?");
    ASSERT_TRUE(m1);
    EXPECT_EQ(answer(*m1), "Government, Healthcare");
    const auto* agg = find("How many distinct sectors does the malware used by APT29 target?");
    ASSERT_TRUE(agg);
    EXPECT_TRUE(agg->aggregate);
    EXPECT_EQ(answer(*agg), "2");
    const auto* m2 = find("Which threat actor uses a malware that targets Government?");
    ASSERT_TRUE(m2);
    EXPECT_EQ(answer(*m2), "APT29");
    const auto* simple = find("What type of malware is WellMess?");
    ASSERT_TRUE(simple);
    EXPECT_EQ(answer(*simple), "backdoor");
    for (const auto& t : items) {
        if (t.category != "UNANSWERABLE") continue;
        auto table = cypher::execute(cypher::parse(t.cypher), g);
        EXPECT_TRUE(cypher::empty_result(table)) << t.question;
    }
}

TEST(Templates, FewshotAdaptation) {
    EXPECT_EQ(adapt_fewshot("Which malware does APT29 use?",
                            "MATCH (a:ThreatActor {name: 'APT29'})-[:uses]->(b:Malware) RETURN b.name AS malware",
                            "Which malware does Lazarus Group use?"),
              "MATCH (a:ThreatActor {name: 'Lazarus Group'})-[:uses]->(b:Malware) RETURN b.name AS malware");
    EXPECT_EQ(adapt_fewshot("Which malware does APT29 use?", "MATCH (a {name: 'APT29'}) RETURN a.name AS n",
                            "Which sector does APT29 target?"),
              "");
    EXPECT_EQ(adapt_fewshot("Who is O'Brien?", "MATCH (a {name: 'O\\'Brien'}) RETURN a.name AS n", "Who is D'Arcy?"),
              "MATCH (a {name: 'D\\'Arcy'}) RETURN a.name AS n");
}

TEST(Responders, TemplateQaHonoursCategoryCountAndAvoid) {
    auto e = entry(PromptRole::QaFromCypher, "*", {}, "template_qa");
    Gateway gw(std::make_shared<ScriptedMock>(std::vector<ScriptEntry>{e}));
    Slots s{{"count", "3"}, {"category", "SINGLE_HOP"}, {"ontology", ""}, {"avoid", ""},
            {"feedback", ""}, {"statements", kScript}};
    auto first = gw.complete_json(PromptRole::QaFromCypher, s).at("items");
    ASSERT_EQ(first.size(), 3u);
    std::string avoid;
    for (const auto& it : first) avoid += it.at("question").get<std::string>() + "\n";
    s["avoid"] = avoid;
    auto second = gw.complete_json(PromptRole::QaFromCypher, s).at("items");
    for (const auto& it : second) EXPECT_EQ(avoid.find(it.at("question").get<std::string>()), std::string::npos);

    s["category"] = "MULTI_HOP";
    s["avoid"] = "";
    s["feedback"] = "Need more aggregate questions.";
    auto multi = gw.complete_json(PromptRole::QaFromCypher, s).at("items");
    ASSERT_FALSE(multi.empty());
    EXPECT_TRUE(multi[0].at("aggregate").get<bool>());
}

TEST(Responders, CritiqueAppliesSchemaHint) {
    auto e = entry(PromptRole::CritiqueCypher, "*", {}, "critique");
    Gateway gw(std::make_shared<ScriptedMock>(std::vector<ScriptEntry>{e}));
    Slots s{{"ontology", ""}, {"cypher", "MATCH (i:Incident)-[:EXPLOITED]->(c:CVE) RETURN c.name AS cve"},
            {"result", ""}, {"feedback", ""}, {"question", "q"},
            {"error", "Validation failed:\nschema: relationship type EXPLOITED is not in the ontology (did you mean exploits?)"}};
    auto j = gw.complete_json(PromptRole::CritiqueCypher, s);
    EXPECT_EQ(j.at("verdict"), "refine");
    EXPECT_EQ(j.at("cypher"), "MATCH (i:Incident)-[:exploits]->(c:CVE) RETURN c.name AS cve");
    s["error"] = "The query executed but returned no results.";
    EXPECT_EQ(gw.complete_json(PromptRole::CritiqueCypher, s).at("verdict"), "cannot_answer");
    s["error"] = "";
    s["result"] = "cve\nCVE-2022-41128\n";
    EXPECT_EQ(gw.complete_json(PromptRole::CritiqueCypher, s).at("verdict"), "approve");
}

TEST(Responders, HeuristicJudgeRules) {
    auto e = entry(PromptRole::Judge, "*", {}, "heuristic_judge");
    Gateway gw(std::make_shared<ScriptedMock>(std::vector<ScriptEntry>{e}));
    json cands = json::array({{{"system", "RAG"}, {"answer", "CVE-2022-41128"}},
                              {{"system", "GRAG"}, {"answer", ""}},
                              {{"system", "HRAG"}, {"answer", kRefusalPhrase}}});
    Slots s{{"feedback", ""}, {"question", "q"}, {"gold", "CVE-2022-41128"}, {"candidates", cands.dump()}};
    auto scores = gw.complete_json(PromptRole::Judge, s).at("scores");
    ASSERT_EQ(scores.size(), 3u);
    EXPECT_EQ(scores[0].at("c1"), 5);
    EXPECT_EQ(scores[1].at("c1"), 0);
    EXPECT_EQ(scores[2].at("c1"), 0);
    s["gold"] = "";
    scores = gw.complete_json(PromptRole::Judge, s).at("scores");
    EXPECT_EQ(scores[2].at("c1"), 5);
    EXPECT_EQ(scores[2].at("c3"), 5);
    EXPECT_LE(scores[0].at("c3").get<int>(), 2);
}
