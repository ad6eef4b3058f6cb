#include "ctirag/harness/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <future>
#include <numeric>
#include <random>
#include <set>

#include "ctirag/analysis/report.hpp"
#include "ctirag/common/io.hpp"
#include "ctirag/common/text.hpp"
#include "ctirag/cypher/executor.hpp"
#include "ctirag/cypher/parser.hpp"
#include "ctirag/cypher/validator.hpp"
#include "ctirag/llm/guardrail.hpp"
#include "ctirag/llm/http_provider.hpp"
#include "ctirag/llm/mock.hpp"
#include "ctirag/qa/qa_factory.hpp"
#include "ctirag/retrieval/retrieval.hpp"
#include "ctirag/scoring/judge.hpp"
#include "ctirag/scoring/record.hpp"

namespace ctirag::harness {

namespace fs = std::filesystem;
using nlohmann::json;
using pipelines::System;

const char* to_string(HarnessErrc code) {
    switch (code) {
        case HarnessErrc::Config: return "Config";
        case HarnessErrc::Corpus: return "Corpus";
        case HarnessErrc::Ingest: return "Ingest";
        case HarnessErrc::MissingArtifact: return "MissingArtifact";
    }
    return "Unknown";
}

HarnessError::HarnessError(HarnessErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw HarnessError(HarnessErrc::Config, msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) config_error(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) config_error("unknown key '" + k + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        config_error(where + "." + key + " has the wrong type");
    }
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<Document> read_dir(const fs::path& dir) {
    std::vector<Document> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".txt") continue;
        out.push_back({e.path().stem().string(), io::read_file(e.path())});
    }
    std::sort(out.begin(), out.end(), [](const Document& a, const Document& b) { return a.id < b.id; });
    return out;
}

const Document& find_doc(const std::vector<Document>& docs, const std::string& id) {
    for (const auto& d : docs)
        if (d.id == id) return d;
    throw HarnessError(HarnessErrc::Corpus, "document '" + id + "' is not in the corpus");
}

fs::path need(const fs::path& p) {
    if (!fs::exists(p)) throw HarnessError(HarnessErrc::MissingArtifact, p.string() + " does not exist");
    return p;
}

json read_json(const fs::path& p) { return json::parse(io::read_file(need(p))); }

void write_json(const fs::path& p, const json& j) { io::write_file_atomic(p, j.dump(2) + "\n"); }

json load_manifest(const fs::path& dir) { return read_json(dir / "manifest.json"); }

void record_stage(const fs::path& dir, const std::string& stage, double seconds, const json& extra = {}) {
    json m = load_manifest(dir);
    m["stages"][stage] = seconds;
    if (extra.is_object())
        for (const auto& [k, v] : extra.items()) m[k] = v;
    write_json(dir / "manifest.json", m);
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<Document> run_reports(const Corpus& corpus, const json& manifest) {
    std::vector<Document> out;
    for (const auto& id : manifest.at("reports")) out.push_back(find_doc(corpus.reports, id.get<std::string>()));
    return out;
}

graph::PropertyGraph load_graph(const fs::path& dir) { return graph::PropertyGraph::from_json(read_json(dir / "graph.json")); }

std::vector<qa::QAItem> load_dataset(const fs::path& dir) {
    return qa::parse_dataset_jsonl(io::read_file(need(dir / "dataset.jsonl")));
}

retrieval::Embedder embedder(llm::Gateway& gw) {
    return [&gw](const std::vector<std::string>& texts) { return gw.embed(texts); };
}

}  // namespace

void RunConfig::validate() const {
    if (corpus.empty()) config_error("corpus path is required");
    if (reports_per_run < 1) config_error("reports_per_run must be at least 1");
    if (runs < 1) config_error("runs must be at least 1");
    if (grag_max_iters < 1 || agrag_max_iters < 1 || ingest_max_attempts < 1)
        config_error("iteration caps must be at least 1");
    if (fewshot_count < 0) config_error("fewshot_count must be non-negative");
    if (chunk_size < 1 || chunk_overlap >= chunk_size) config_error("chunk overlap must be smaller than chunk size");
    if (rag_k < 1 || hrag_k < 1) config_error("retrieval k must be at least 1");
    if (bootstrap_resamples < 1) config_error("bootstrap resamples must be at least 1");
    if (provider.kind != "mock" && provider.kind != "http") config_error("provider.kind must be mock or http");
    if (provider.kind == "mock" && provider.script.empty()) config_error("provider.script is required for the mock");
}

pipelines::PipelineConfig RunConfig::pipeline() const {
    pipelines::PipelineConfig p;
    p.rag_k = rag_k;
    p.hrag_k = hrag_k;
    p.grag_max_iters = grag_max_iters;
    p.agrag_max_iters = agrag_max_iters;
    p.budget_s = budget_s;
    p.llm_guardrail = llm_guardrail;
    p.count_wall_time = provider.kind != "mock";
    return p;
}

RunConfig config_from_json(const json& j, const fs::path& base) {
    check_keys(j, {"corpus", "reports_per_run", "runs", "seed", "provider", "pipeline", "ingest", "chunk", "bootstrap",
                   "cost_table", "parallel"},
               "config");
    RunConfig c;
    std::string corpus, cost;
    read(j, "corpus", corpus, "config");
    read(j, "reports_per_run", c.reports_per_run, "config");
    read(j, "runs", c.runs, "config");
    read(j, "seed", c.seed, "config");
    read(j, "cost_table", cost, "config");
    read(j, "parallel", c.parallel, "config");
    c.corpus = resolve(corpus, base);
    c.cost_table = resolve(cost, base);
    if (j.contains("provider")) {
        const auto& p = j["provider"];
        check_keys(p, {"kind", "script", "base_url_env", "api_key_env", "model", "embedding_model", "timeout_s"},
                   "provider");
        std::string script;
        read(p, "kind", c.provider.kind, "provider");
        read(p, "script", script, "provider");
        read(p, "base_url_env", c.provider.base_url_env, "provider");
        read(p, "api_key_env", c.provider.api_key_env, "provider");
        read(p, "model", c.provider.model, "provider");
        read(p, "embedding_model", c.provider.embedding_model, "provider");
        read(p, "timeout_s", c.provider.timeout_s, "provider");
        c.provider.script = resolve(script, base);
    }
    if (j.contains("pipeline")) {
        const auto& p = j["pipeline"];
        check_keys(p, {"grag_max_iters", "agrag_max_iters", "budget_s", "llm_guardrail", "hrag_k", "fewshot_count"},
                   "pipeline");
        read(p, "grag_max_iters", c.grag_max_iters, "pipeline");
        read(p, "agrag_max_iters", c.agrag_max_iters, "pipeline");
        read(p, "budget_s", c.budget_s, "pipeline");
        read(p, "llm_guardrail", c.llm_guardrail, "pipeline");
        read(p, "hrag_k", c.hrag_k, "pipeline");
        read(p, "fewshot_count", c.fewshot_count, "pipeline");
    }
    if (j.contains("ingest")) {
        check_keys(j["ingest"], {"max_attempts"}, "ingest");
        read(j["ingest"], "max_attempts", c.ingest_max_attempts, "ingest");
    }
    if (j.contains("chunk")) {
        check_keys(j["chunk"], {"size", "overlap", "k"}, "chunk");
        read(j["chunk"], "size", c.chunk_size, "chunk");
        read(j["chunk"], "overlap", c.chunk_overlap, "chunk");
        read(j["chunk"], "k", c.rag_k, "chunk");
    }
    if (j.contains("bootstrap")) {
        check_keys(j["bootstrap"], {"resamples"}, "bootstrap");
        read(j["bootstrap"], "resamples", c.bootstrap_resamples, "bootstrap");
    }
    return c;
}

json to_json(const RunConfig& c) {
    return {{"corpus", c.corpus.string()},
            {"reports_per_run", c.reports_per_run},
            {"runs", c.runs},
            {"seed", c.seed},
            {"provider",
             {{"kind", c.provider.kind},
              {"script", c.provider.script.string()},
              {"base_url_env", c.provider.base_url_env},
              {"api_key_env", c.provider.api_key_env},
              {"model", c.provider.model},
              {"embedding_model", c.provider.embedding_model},
              {"timeout_s", c.provider.timeout_s}}},
            {"pipeline",
             {{"grag_max_iters", c.grag_max_iters},
              {"agrag_max_iters", c.agrag_max_iters},
              {"budget_s", c.budget_s},
              {"llm_guardrail", c.llm_guardrail},
              {"hrag_k", c.hrag_k},
              {"fewshot_count", c.fewshot_count}}},
            {"ingest", {{"max_attempts", c.ingest_max_attempts}}},
            {"chunk", {{"size", c.chunk_size}, {"overlap", c.chunk_overlap}, {"k", c.rag_k}}},
            {"bootstrap", {{"resamples", c.bootstrap_resamples}}},
            {"cost_table", c.cost_table.string()},
            {"parallel", c.parallel}};
}

RunConfig load_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        config_error(path.string() + ": " + e.what());
    } catch (const std::exception& e) {
        config_error(e.what());
    }
    return config_from_json(j, path.parent_path());
}

analysis::CostModel cost_model_from_json(const json& j) {
    auto m = analysis::CostModel::defaults();
    try {
        if (j.contains("multipliers"))
            for (const auto& [k, v] : j["multipliers"].items()) m.multipliers[k] = v.get<double>();
        if (j.contains("prices"))
            for (const auto& [k, v] : j["prices"].items())
                m.prices[k] = {v.at("input_per_m").get<double>(), v.at("output_per_m").get<double>(),
                               v.value("reasoning", false)};
        if (j.contains("budget")) {
            m.budget.input = j["budget"].value("input", m.budget.input);
            m.budget.output = j["budget"].value("output", m.budget.output);
            m.budget.reasoning = j["budget"].value("reasoning", m.budget.reasoning);
        }
        if (j.contains("category_reasoning_scale"))
            for (const auto& [k, v] : j["category_reasoning_scale"].items())
                m.category_reasoning_scale[k] = v.get<double>();
    } catch (const json::exception& e) {
        config_error(std::string("cost table: ") + e.what());
    }
    return m;
}

Corpus load_corpus(const fs::path& root) {
    if (!fs::is_directory(root / "reports"))
        throw HarnessError(HarnessErrc::Config, "corpus " + root.string() + " has no reports/ directory");
    Corpus c;
    c.reports = read_dir(root / "reports");
    c.external = read_dir(root / "external");
    if (c.reports.empty()) throw HarnessError(HarnessErrc::Config, "corpus " + root.string() + " has no reports");
    return c;
}

std::uint64_t sub_seed(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : name) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return splitmix(seed ^ splitmix(h));
}

std::vector<std::size_t> sample_reports(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(n, k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::shared_ptr<llm::Provider> make_provider(const ProviderConfig& config) {
    if (config.kind == "mock") {
        std::shared_ptr<llm::ScriptedMock> mock = llm::ScriptedMock::from_file(config.script);
        return mock;
    }
    auto http = llm::HttpProviderConfig::from_env(config.base_url_env, config.api_key_env);
    if (!config.model.empty()) http.model = config.model;
    if (!config.embedding_model.empty()) http.embedding_model = config.embedding_model;
    http.timeout_s = config.timeout_s;
    return std::make_shared<llm::HttpProvider>(http);
}

json to_json(const IngestLog& l) {
    return {{"document_id", l.document_id}, {"attempts", l.attempts}, {"accepted", l.accepted}, {"errors", l.errors}};
}

IngestResult ingest(const std::vector<Document>& documents, llm::Gateway& gateway, int max_attempts) {
    IngestResult out;
    const auto& onto = out.graph.ontology();
    const std::string schema = onto.describe();
    for (const auto& doc : documents) {
        IngestLog log;
        log.document_id = doc.id;
        std::string feedback;
        while (log.attempts < max_attempts && !log.accepted) {
            ++log.attempts;
            const auto reply = gateway.complete(llm::PromptRole::IngestToCypher,
                                                {{"ontology", schema},
                                                 {"document_id", doc.id},
                                                 {"document", doc.text},
                                                 {"feedback", feedback}});
            const std::string script = pipelines::clean_query(reply.text);
            std::string error;
            std::vector<cypher::CypherAst> statements;
            try {
                statements = cypher::parse_script(script);
                if (statements.empty()) error = "no statements";
            } catch (const std::exception& e) {
                error = e.what();
            }
            if (error.empty()) {
                for (const auto& ast : statements) {
                    auto report = cypher::validate(ast, onto, cypher::Mode::Write);
                    if (!report.ok()) error += report.summary() + "\n";
                }
            }
            if (error.empty()) {
                graph::PropertyGraph trial = out.graph;
                try {
                    for (const auto& ast : statements) cypher::execute(ast, trial);
                    out.graph = std::move(trial);
                    out.statements += script + ";\n";
                    log.accepted = true;
                } catch (const std::exception& e) {
                    error = e.what();
                }
            }
            if (!log.accepted) {
                error = text::trim(error);
                log.errors.push_back(error);
                feedback = "Your previous Cypher was rejected:\n" + error +
                           "\nFix these problems and emit the complete corrected statements.";
            }
        }
        out.logs.push_back(std::move(log));
    }
    out.graph.freeze();
    return out;
}

fs::path run_dir(const fs::path& experiment_dir, int run) { return experiment_dir / ("run-" + std::to_string(run)); }

void stage_ingest(const RunConfig& config, const Corpus& corpus, const fs::path& experiment_dir, int run,
                  llm::Gateway& gateway) {
    Stopwatch sw;
    const fs::path dir = run_dir(experiment_dir, run);
    fs::create_directories(dir);
    const auto seed = sub_seed(config.seed, "run-" + std::to_string(run) + "/sample");
    json manifest{{"run", run}, {"status", "running"}, {"seed", seed}, {"reports", json::array()},
                  {"external", nullptr}, {"stages", json::object()}};
    for (auto i : sample_reports(corpus.reports.size(), static_cast<std::size_t>(config.reports_per_run), seed))
        manifest["reports"].push_back(corpus.reports[i].id);
    if (!corpus.external.empty()) {
        std::mt19937_64 rng(sub_seed(config.seed, "run-" + std::to_string(run) + "/external"));
        std::uniform_int_distribution<std::size_t> pick(0, corpus.external.size() - 1);
        manifest["external"] = corpus.external[pick(rng)].id;
    }
    manifest["models"] = {{"answer", gateway.model_id()}, {"embedding", gateway.provider().embedding_model_id()}};
    write_json(dir / "manifest.json", manifest);

    const auto reports = run_reports(corpus, manifest);
    auto result = ingest(reports, gateway, config.ingest_max_attempts);
    json logs = json::array();
    std::size_t accepted = 0;
    for (const auto& l : result.logs) {
        logs.push_back(to_json(l));
        accepted += l.accepted;
    }
    write_json(dir / "graph.json", result.graph.to_json());
    io::write_file_atomic(dir / "statements.cypher", result.statements);

    retrieval::IndexSnapshot snap;
    for (const auto& d : reports) {
        auto chunks = retrieval::chunk_text(d.id, d.text, config.chunk_size, config.chunk_overlap);
        snap.chunks.insert(snap.chunks.end(), chunks.begin(), chunks.end());
    }
    retrieval::embed_chunks(snap.chunks, embedder(gateway));
    snap.searchdocs = retrieval::build_searchdocs(result.graph);
    retrieval::embed_searchdocs(snap.searchdocs, embedder(gateway));
    retrieval::save_snapshot(dir / "index.jsonl", snap);

    record_stage(dir, "ingest", sw.seconds(),
                 {{"ingest", logs}, {"graph", {{"nodes", result.graph.node_count()}, {"edges", result.graph.edge_count()}}}});
    if (accepted == 0) throw HarnessError(HarnessErrc::Ingest, "no report of run " + std::to_string(run) + " was ingested");
}

void stage_gen_qa(const RunConfig& config, const Corpus& corpus, const fs::path& experiment_dir, int run,
                  llm::Gateway& gateway) {
    Stopwatch sw;
    const fs::path dir = run_dir(experiment_dir, run);
    const json manifest = load_manifest(dir);
    const auto graph = load_graph(dir);
    const std::string statements = io::read_file(need(dir / "statements.cypher"));

    auto fewshots = pipelines::generate_fewshots(statements, graph, gateway, config.fewshot_count);
    std::vector<json> rows;
    for (const auto& f : fewshots) rows.push_back(pipelines::to_json(f));
    io::write_file_atomic(dir / "fewshots.jsonl", io::to_jsonl(rows));

    qa::GenerationLog log;
    auto items = qa::generate_from_cypher(statements, graph, gateway, {}, &log);
    if (!manifest.at("external").is_null()) {
        const auto& doc = find_doc(corpus.external, manifest["external"].get<std::string>());
        std::vector<std::string> avoid;
        for (const auto& i : items) avoid.push_back(i.question);
        auto guided = qa::generate_guided(doc.id, doc.text, graph, gateway, avoid, {}, &log);
        items.insert(items.end(), guided.begin(), guided.end());
    }
    io::write_file_atomic(dir / "dataset.jsonl", qa::dataset_jsonl(items));

    json rejections = json::array();
    for (const auto& r : log.rejections)
        rejections.push_back({{"category", r.category}, {"question", r.question}, {"reason", r.reason}});
    record_stage(dir, "gen-qa", sw.seconds(),
                 {{"fewshots", fewshots.size()},
                  {"questions", items.size()},
                  {"qa_asks", log.asks},
                  {"qa_rejections", rejections},
                  {"dataset_quality", qa::to_json(qa::validate_dataset(items))}});
}

void stage_answer(const RunConfig& config, const Corpus& corpus, const fs::path& experiment_dir, int run,
                  llm::Gateway& gateway, std::optional<System> only) {
    Stopwatch sw;
    const fs::path dir = run_dir(experiment_dir, run);
    const auto graph = load_graph(dir);
    const auto items = load_dataset(dir);
    const auto snap = retrieval::load_snapshot(need(dir / "index.jsonl"));
    std::vector<pipelines::FewshotPair> fewshots;
    for (const auto& row : io::read_jsonl(need(dir / "fewshots.jsonl"))) fewshots.push_back(pipelines::fewshot_from_json(row));
    std::vector<std::string> names;
    for (const auto& n : graph.nodes()) names.push_back(n.name());
    const llm::Guardrail guardrail(llm::Guardrail::default_keywords(), names);
    const auto cfg = config.pipeline();

    auto wants = [&](System s) { return !only || *only == s; };
    std::vector<json> rows;
    auto emit = [&](const qa::QAItem& item, const pipelines::PipelineAnswer& a) {
        json row{{"run", run}, {"question_id", item.id}, {"category", qa::to_string(item.category)}};
        row.update(pipelines::to_json(a));
        rows.push_back(std::move(row));
    };
    for (const auto& item : items) {
        if (wants(System::RAG)) emit(item, pipelines::run_rag(item.question, snap.chunks, gateway, cfg));
        if (wants(System::GRAG) || wants(System::AGRAG)) {
            auto grag = pipelines::run_grag(item.question, graph, fewshots, gateway, guardrail, cfg);
            if (wants(System::GRAG)) emit(item, grag);
            if (wants(System::AGRAG)) emit(item, pipelines::run_agrag(item.question, graph, grag, gateway, cfg));
        }
        if (wants(System::HRAG)) emit(item, pipelines::run_hrag(item.question, graph, snap.searchdocs, gateway, guardrail, cfg));
    }
    io::write_file_atomic(dir / "answers.jsonl", io::to_jsonl(rows));
    record_stage(dir, "answer", sw.seconds(), {{"answers", rows.size()}});
}

void stage_score(const RunConfig& config, const fs::path& experiment_dir, int run, llm::Gateway& gateway) {
    Stopwatch sw;
    const fs::path dir = run_dir(experiment_dir, run);
    const auto items = load_dataset(dir);
    std::map<std::string, std::map<System, pipelines::PipelineAnswer>> answers;
    for (const auto& row : io::read_jsonl(need(dir / "answers.jsonl"))) {
        auto a = pipelines::answer_from_json(row);
        const auto sys = pipelines::system_from_string(a.system);
        if (!sys) throw HarnessError(HarnessErrc::MissingArtifact, "unknown system " + a.system + " in answers");
        answers[row.at("question_id").get<std::string>()][*sys] = std::move(a);
    }
    std::map<std::string, std::vector<double>> cache;
    scoring::TextEmbedder embed = [&](const std::string& s) {
        auto it = cache.find(s);
        if (it == cache.end()) it = cache.emplace(s, gateway.embed({s}).at(0)).first;
        return it->second;
    };
    std::vector<json> rows;
    for (const auto& item : items) {
        auto found = answers.find(item.id);
        if (found == answers.end()) continue;
        std::vector<scoring::Candidate> cands;
        std::vector<const pipelines::PipelineAnswer*> order;
        for (const auto& [sys, a] : found->second) {
            cands.push_back({pipelines::to_string(sys), a.answer_text});
            order.push_back(&a);
        }
        auto judged = scoring::judge(item.question, item.gold_answer, cands, gateway);
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto& a = *order[i];
            scoring::ScoreRecord r;
            r.run = run;
            r.question_id = item.id;
            r.category = qa::to_string(item.category);
            r.system = cands[i].system;
            r.metrics = scoring::compute_metrics(a.answer_text, item.gold_answer, embed);
            r.judge = judged[i];
            r.latency_s = a.latency_s;
            r.is_refusal = a.is_refusal;
            r.iterations = a.iterations;
            r.llm_calls = static_cast<int>(a.llm_calls);
            r.input_tokens = a.usage.input_tokens;
            r.output_tokens = a.usage.output_tokens;
            r.reasoning_tokens = a.usage.reasoning_tokens;
            rows.push_back(scoring::to_json(r));
        }
    }
    io::write_file_atomic(dir / "scores.jsonl", io::to_jsonl(rows));
    record_stage(dir, "score", sw.seconds(), {{"scores", rows.size()}, {"judge_model", gateway.model_id()}});
}

json analyze_files(const RunConfig& config, const std::vector<fs::path>& score_files,
                   const std::vector<fs::path>& dataset_files, const json& models) {
    std::vector<scoring::ScoreRecord> records;
    std::vector<int> file_runs;
    for (const auto& f : score_files) {
        auto part = scoring::read_records(io::read_jsonl(need(f)));
        file_runs.push_back(part.empty() ? static_cast<int>(file_runs.size()) + 1 : part.front().run);
        records.insert(records.end(), part.begin(), part.end());
    }
    // Dataset i belongs to the run of score file i.
    std::map<std::string, analysis::QuestionInfo> questions;
    for (std::size_t i = 0; i < dataset_files.size(); ++i) {
        const int run = i < file_runs.size() ? file_runs[i] : static_cast<int>(i) + 1;
        for (const auto& item : qa::parse_dataset_jsonl(io::read_file(need(dataset_files[i]))))
            questions[std::to_string(run) + "/" + item.id] = {item.question, item.gold_answer, qa::to_string(item.category)};
    }
    json model_ids = models;
    for (const auto& f : score_files) {
        if (model_ids.is_object() && !model_ids.empty()) break;
        const auto manifest = f.parent_path() / "manifest.json";
        if (!fs::exists(manifest)) continue;
        const json m = read_json(manifest);
        model_ids = m.value("models", json::object());
        if (m.contains("judge_model")) model_ids["judge"] = m["judge_model"];
    }
    analysis::ReportOptions opt;
    opt.resamples = config.bootstrap_resamples;
    opt.seed = sub_seed(config.seed, "bootstrap");
    if (!config.cost_table.empty()) opt.cost = cost_model_from_json(read_json(config.cost_table));
    if (model_ids.is_object()) {
        opt.answer_model = model_ids.value("answer", std::string());
        opt.judge_model = model_ids.value("judge", opt.answer_model);
        opt.embedding_model = model_ids.value("embedding", std::string());
    }
    return analysis::build_report(records, questions, opt);
}

std::vector<int> completed_runs(const fs::path& experiment_dir) {
    std::vector<int> out;
    if (!fs::is_directory(experiment_dir)) return out;
    for (const auto& e : fs::directory_iterator(experiment_dir)) {
        const auto name = e.path().filename().string();
        if (!e.is_directory() || name.rfind("run-", 0) != 0 || !fs::exists(e.path() / "manifest.json")) continue;
        const json m = read_json(e.path() / "manifest.json");
        if (m.value("status", std::string()) == "ok") out.push_back(m.at("run").get<int>());
    }
    std::sort(out.begin(), out.end());
    return out;
}

json stage_analyze(const RunConfig& config, const fs::path& experiment_dir) {
    const auto runs = completed_runs(experiment_dir);
    if (runs.empty()) throw HarnessError(HarnessErrc::MissingArtifact, "no completed runs under " + experiment_dir.string());
    std::vector<fs::path> scores;
    std::vector<fs::path> datasets;
    for (int r : runs) {
        scores.push_back(run_dir(experiment_dir, r) / "scores.jsonl");
        datasets.push_back(run_dir(experiment_dir, r) / "dataset.jsonl");
    }
    return analyze_files(config, scores, datasets);
}

void write_report(const json& report, const fs::path& dir) {
    fs::create_directories(dir / "tables");
    write_json(dir / "report.json", report);
    for (const auto& [name, csv] : analysis::report_csvs(report)) io::write_file_atomic(dir / "tables" / name, csv);
}

namespace {

RunStatus execute_run(const RunConfig& config, const Corpus& corpus, const fs::path& experiment_dir, int run) {
    RunStatus st;
    st.run = run;
    const fs::path dir = run_dir(experiment_dir, run);
    std::shared_ptr<llm::Gateway> gw;
    try {
        gw = std::make_shared<llm::Gateway>(make_provider(config.provider));
        stage_ingest(config, corpus, experiment_dir, run, *gw);
        stage_gen_qa(config, corpus, experiment_dir, run, *gw);
        stage_answer(config, corpus, experiment_dir, run, *gw);
        stage_score(config, experiment_dir, run, *gw);
        st.ok = true;
    } catch (const std::exception& e) {
        st.error = e.what();
    }
    try {
        fs::create_directories(dir);
        json m = fs::exists(dir / "manifest.json") ? load_manifest(dir) : json{{"run", run}};
        m["status"] = st.ok ? "ok" : "failed";
        m["error"] = st.error;
        if (gw) {
            m["llm_calls"] = gw->call_count();
            std::vector<json> calls;
            for (const auto& c : gw->call_log()) calls.push_back(llm::to_json(c));
            io::write_file_atomic(dir / "calls.jsonl", io::to_jsonl(calls));
        }
        write_json(dir / "manifest.json", m);
    } catch (const std::exception& e) {
        st.ok = false;
        st.error += std::string(st.error.empty() ? "" : "; ") + e.what();
    }
    return st;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config, const fs::path& experiment_dir) {
    config.validate();
    const Corpus corpus = load_corpus(config.corpus);
    if (config.provider.kind == "mock" && !fs::exists(config.provider.script))
        config_error("mock script " + config.provider.script.string() + " does not exist");
    if (!config.cost_table.empty() && !fs::exists(config.cost_table))
        config_error("cost table " + config.cost_table.string() + " does not exist");

    fs::create_directories(experiment_dir);
    write_json(experiment_dir / "config.json", to_json(config));
    ExperimentResult res;
    if (config.parallel && config.provider.kind == "http") {
        std::vector<std::future<RunStatus>> futures;
        for (int r = 1; r <= config.runs; ++r)
            futures.push_back(std::async(std::launch::async, execute_run, std::cref(config), std::cref(corpus),
                                         std::cref(experiment_dir), r));
        for (auto& f : futures) res.runs.push_back(f.get());
    } else {
        for (int r = 1; r <= config.runs; ++r) res.runs.push_back(execute_run(config, corpus, experiment_dir, r));
    }
    const bool all_ok = std::all_of(res.runs.begin(), res.runs.end(), [](const RunStatus& s) { return s.ok; });
    const bool any_ok = std::any_of(res.runs.begin(), res.runs.end(), [](const RunStatus& s) { return s.ok; });
    if (any_ok) {
        try {
            write_report(stage_analyze(config, experiment_dir), experiment_dir);
        } catch (const std::exception& e) {
            res.runs.push_back({0, false, std::string("analysis: ") + e.what()});
            res.exit_code = 2;
            return res;
        }
    }
    res.exit_code = all_ok ? 0 : 2;
    return res;
}

}  // namespace ctirag::harness
