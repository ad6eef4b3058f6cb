// Command-line driver for experiments and individual stages.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ctirag/common/io.hpp"
#include "ctirag/harness/harness.hpp"

namespace fs = std::filesystem;
using namespace ctirag;
using nlohmann::json;

namespace {

struct Overrides {
    std::optional<int> runs;
    std::optional<int> reports_per_run;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> corpus;
    std::optional<std::string> provider;
    std::optional<std::string> script;
    std::optional<double> budget_s;
    std::optional<std::size_t> resamples;
    bool parallel = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--runs", o.runs, "Number of runs");
    cmd->add_option("--reports-per-run", o.reports_per_run, "Reports sampled per run");
    cmd->add_option("--seed", o.seed, "Experiment seed");
    cmd->add_option("--corpus", o.corpus, "Corpus directory");
    cmd->add_option("--provider", o.provider, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    cmd->add_option("--script", o.script, "Mock script path");
    cmd->add_option("--budget", o.budget_s, "Per-question budget in seconds");
    cmd->add_option("--resamples", o.resamples, "Bootstrap resamples");
    cmd->add_flag("--parallel", o.parallel, "Run in parallel (http provider only)");
}

harness::RunConfig make_config(const std::string& path, const Overrides& o) {
    auto c = harness::load_config(path);
    if (o.runs) c.runs = *o.runs;
    if (o.reports_per_run) c.reports_per_run = *o.reports_per_run;
    if (o.seed) c.seed = *o.seed;
    if (o.corpus) c.corpus = *o.corpus;
    if (o.provider) c.provider.kind = *o.provider;
    if (o.script) c.provider.script = *o.script;
    if (o.budget_s) c.budget_s = *o.budget_s;
    if (o.resamples) c.bootstrap_resamples = *o.resamples;
    if (o.parallel) c.parallel = true;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented QA evaluation harness for threat-intelligence reports"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int run = 1;
    std::string system;
    Overrides ov;
    std::vector<std::string> score_files, dataset_files;
    std::string report_in, output;

    auto* run_cmd = app.add_subcommand("run", "Run the full experiment");
    auto* ingest_cmd = app.add_subcommand("ingest", "Sample reports and build the run's graph and indexes");
    auto* genqa_cmd = app.add_subcommand("gen-qa", "Generate few-shots and the evaluation dataset");
    auto* answer_cmd = app.add_subcommand("answer", "Answer the dataset with one or all systems");
    auto* score_cmd = app.add_subcommand("score", "Judge and score a run's answers");
    auto* analyze_cmd = app.add_subcommand("analyze", "Build the analysis report from score files");
    auto* report_cmd = app.add_subcommand("report", "Export CSV tables from a report");

    for (auto* cmd : {run_cmd, ingest_cmd, genqa_cmd, answer_cmd, score_cmd, analyze_cmd}) {
        cmd->add_option("-c,--config", config_path, "Config file (JSON)")->required();
        add_overrides(cmd, ov);
    }
    for (auto* cmd : {run_cmd, ingest_cmd, genqa_cmd, answer_cmd, score_cmd})
        cmd->add_option("-o,--out", out_dir, "Experiment directory")->required();
    for (auto* cmd : {ingest_cmd, genqa_cmd, answer_cmd, score_cmd})
        cmd->add_option("-r,--run", run, "Run number")->check(CLI::PositiveNumber);
    answer_cmd->add_option("-s,--system", system, "rag, grag, agrag or hrag (default all)");
    analyze_cmd->add_option("-d,--dir", out_dir, "Experiment directory");
    analyze_cmd->add_option("--scores", score_files, "Score JSONL files");
    analyze_cmd->add_option("--dataset", dataset_files, "Dataset JSONL files, one per score file");
    analyze_cmd->add_option("-o,--output", output, "Report path (default stdout)");
    report_cmd->add_option("-i,--report", report_in, "report.json")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("-o,--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*report_cmd) {
            harness::write_report(json::parse(io::read_file(report_in)), out_dir);
            return 0;
        }
        const auto config = make_config(config_path, ov);
        if (*run_cmd) {
            auto res = harness::run_experiment(config, out_dir);
            for (const auto& r : res.runs) {
                if (r.ok) {
                    std::cout << "run-" << r.run << ": ok\n";
                } else {
                    std::cerr << "run-" << r.run << ": failed: " << r.error << "\n";
                }
            }
            return res.exit_code;
        }
        if (*analyze_cmd) {
            json report;
            if (!score_files.empty()) {
                report = harness::analyze_files(config, std::vector<fs::path>(score_files.begin(), score_files.end()),
                                                std::vector<fs::path>(dataset_files.begin(), dataset_files.end()));
            } else if (!out_dir.empty()) {
                report = harness::stage_analyze(config, out_dir);
            } else {
                std::cerr << "analyze needs --dir or --scores\n";
                return 1;
            }
            if (output.empty()) {
                std::cout << report.dump(2) << "\n";
            } else {
                io::write_file_atomic(output, report.dump(2) + "\n");
            }
            return 0;
        }

        const auto corpus = harness::load_corpus(config.corpus);
        llm::Gateway gw(harness::make_provider(config.provider));
        if (*ingest_cmd) harness::stage_ingest(config, corpus, out_dir, run, gw);
        if (*genqa_cmd) harness::stage_gen_qa(config, corpus, out_dir, run, gw);
        if (*answer_cmd) {
            std::optional<pipelines::System> only;
            if (!system.empty()) {
                only = pipelines::system_from_string(system);
                if (!only) {
                    std::cerr << "unknown system '" << system << "'\n";
                    return 1;
                }
            }
            harness::stage_answer(config, corpus, out_dir, run, gw, only);
        }
        if (*score_cmd) {
            harness::stage_score(config, out_dir, run, gw);
            // A run scored stage by stage is complete once its scores exist.
            const auto manifest = harness::run_dir(out_dir, run) / "manifest.json";
            auto m = json::parse(io::read_file(manifest));
            m["status"] = "ok";
            m["error"] = "";
            io::write_file_atomic(manifest, m.dump(2) + "\n");
        }
        return 0;
    } catch (const harness::HarnessError& e) {
        std::cerr << e.what() << "\n";
        return e.code() == harness::HarnessErrc::Config ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
