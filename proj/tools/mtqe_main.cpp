// mtqe: reference-free translation quality estimation with LLM judges.
//
// Subcommands mirror the pipeline stages (judge -> filter -> evaluate),
// each re-runnable from files, plus `run` for the fused pipeline,
// `report` to render a report.json and `mock-serve` for offline testing.

#include "mtqe/error.hpp"
#include "mtqe/filtering.hpp"
#include "mtqe/ingestion.hpp"
#include "mtqe/json_repair.hpp"
#include "mtqe/jsonl.hpp"
#include "mtqe/llm_client.hpp"
#include "mtqe/log.hpp"
#include "mtqe/meta_metrics.hpp"
#include "mtqe/mock_server.hpp"
#include "mtqe/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

namespace {

using namespace mtqe;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

std::string api_token_from_env() {
    for (const char* name : {"MTQE_API_KEY", "OPENAI_API_KEY"}) {
        if (const char* value = std::getenv(name); value && *value) return value;
    }
    return "";
}

SeverityMap parse_severity_map(const std::string& spec) {
    SeverityMap map;
    if (spec.empty()) return map;
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t comma = spec.find(',', start);
        std::string part = spec.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t eq = part.find('=');
        if (eq == std::string::npos) {
            throw Error("severity map entry '" + part + "' is not from=to");
        }
        auto from = severity_from_name(part.substr(0, eq));
        auto to = severity_from_name(part.substr(eq + 1));
        if (!from || !to) {
            throw Error("severity map entry '" + part + "' uses unknown severity");
        }
        switch (*from) {
            case Severity::kCritical: map.critical = *to; break;
            case Severity::kMajor: map.major = *to; break;
            case Severity::kMinor: map.minor = *to; break;
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return map;
}

struct ClientArgs {
    std::string endpoint;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 8192;
    double timeout_s = 120.0;
    int max_retries = 3;
    int parallelism = 4;
    double backoff_initial_s = 1.0;
    std::string cache_dir;
    std::string extra_body;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--endpoint", endpoint,
                        "OpenAI-compatible base URL, e.g. http://host:port/v1");
        cmd->add_option("--model", model, "Model name")->required();
        cmd->add_option("--temperature", temperature,
                        "Sampling temperature (0 = greedy)");
        cmd->add_option("--max-tokens", max_tokens, "Completion token limit");
        cmd->add_option("--timeout", timeout_s, "Request timeout in seconds");
        cmd->add_option("--max-retries", max_retries,
                        "Retries on transient failures");
        cmd->add_option("--parallelism", parallelism,
                        "Max requests in flight");
        cmd->add_option("--backoff-initial", backoff_initial_s,
                        "Initial retry backoff in seconds");
        cmd->add_option("--cache-dir", cache_dir,
                        "Content-addressed response cache directory");
        cmd->add_option("--extra-body", extra_body,
                        "JSON object merged into each request body");
    }

    ClientConfig to_config() const {
        ClientConfig config;
        config.endpoint_url = endpoint;
        config.model_name = model;
        config.temperature = temperature;
        config.max_output_tokens = max_tokens;
        config.request_timeout_s = timeout_s;
        config.max_retries = max_retries;
        config.parallelism = parallelism;
        config.backoff_initial_s = backoff_initial_s;
        if (!cache_dir.empty()) config.cache_dir = cache_dir;
        config.api_token = api_token_from_env();
        if (!extra_body.empty()) {
            config.extra_body = nlohmann::json::parse(extra_body);
            if (!config.extra_body.is_object()) {
                throw Error("--extra-body must be a JSON object");
            }
        }
        return config;
    }
};

struct MetricArgs {
    int resamples = kDefaultResamples;
    std::uint64_t seed = 0;
    std::string severity_map_spec;
    bool scores_only = false;
    bool iaa = false;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--resamples", resamples,
                        "Permutation resamples per system pair");
        cmd->add_option("--seed", seed, "Random seed (required for determinism)")
            ->required();
        cmd->add_option("--severity-map", severity_map_spec,
                        "Predicted->gold severity map, e.g. critical=major");
        cmd->add_flag("--scores-only", scores_only, "Skip span metrics");
        cmd->add_flag("--iaa", iaa, "Annotator-vs-annotator mode");
    }

    EvalOptions to_options() const {
        EvalOptions options;
        options.resamples = resamples;
        options.seed = seed;
        options.severity_map = parse_severity_map(severity_map_spec);
        options.scores_only = scores_only;
        options.iaa = iaa;
        return options;
    }
};

int write_judge_outputs(const JudgeStageResult& result,
                        const std::filesystem::path& out_dir) {
    write_jsonl(out_dir / "raw_completions.jsonl", result.raw_rows);
    std::vector<nlohmann::ordered_json> rows;
    rows.reserve(result.judgments.size());
    for (const auto& record : result.judgments) {
        rows.push_back(judgment_record_to_json(record));
    }
    write_jsonl(out_dir / "judgments.jsonl", rows);
    log_info("judge stage finished",
             {{"segments", result.raw_rows.size()},
              {"judgments", result.judgments.size()},
              {"failed", result.failed_segments}});
    if (result.failed_segments == 0) return kExitOk;
    return result.judgments.empty() ? kExitFatal : kExitPartial;
}

void write_filter_outputs(const FilterStageResult& result,
                          const std::filesystem::path& out_dir) {
    std::vector<nlohmann::ordered_json> rows;
    rows.reserve(result.filtered.size());
    for (const auto& record : result.filtered) {
        rows.push_back(judgment_record_to_json(record));
    }
    write_jsonl(out_dir / "filtered.jsonl", rows);
    write_text_file(out_dir / "filter_report.json", result.report.dump(2) + "\n");
}

void write_eval_outputs(const EvalOutputs& outputs,
                        const std::filesystem::path& out_dir, bool csv) {
    write_text_file(out_dir / "report.json", outputs.report.dump(2) + "\n");
    write_text_file(out_dir / "report.md", outputs.report_md);
    if (!outputs.predicted_spans.empty()) {
        write_jsonl(out_dir / "predicted_spans.jsonl", outputs.predicted_spans);
    }
    if (csv) write_text_file(out_dir / "scores.csv", outputs.scores_csv);
}

std::atomic<bool> g_interrupted{false};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reference-free MT quality estimation with LLM judges"};
    app.require_subcommand(1);

    std::string log_level = "info";
    app.add_option("--log-level", log_level, "debug|info|warn|error")
        ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

    // judge
    auto* judge = app.add_subcommand("judge", "Query the model for judgments");
    std::string judge_segments, judge_out;
    ClientArgs judge_client;
    judge->add_option("--segments", judge_segments, "segments.jsonl")->required();
    judge->add_option("--out", judge_out, "Output directory")->required();
    judge_client.add_options(judge);

    // filter
    auto* filter = app.add_subcommand("filter", "Apply error filters");
    std::string filter_judgments, filter_segments, filter_out;
    FilterOptions filter_options;
    bool no_dedupe = false, no_halluc = false;
    filter->add_option("--judgments", filter_judgments, "judgments.jsonl")->required();
    filter->add_option("--segments", filter_segments, "segments.jsonl")->required();
    filter->add_option("--out", filter_out, "Output directory")->required();
    filter->add_flag("--no-dedupe", no_dedupe, "Skip cross-severity dedup");
    filter->add_flag("--no-hallucination-filter", no_halluc,
                     "Skip the hallucinated-span filter");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Meta-evaluate judgments");
    std::string eval_segments, eval_gold, eval_judgments, eval_filtered,
        eval_filter_report, eval_out;
    bool eval_csv = false;
    MetricArgs eval_metrics;
    evaluate->add_option("--segments", eval_segments, "segments.jsonl")->required();
    evaluate->add_option("--gold", eval_gold, "gold.jsonl")->required();
    evaluate->add_option("--judgments", eval_judgments, "Unfiltered judgments");
    evaluate->add_option("--filtered", eval_filtered, "Filtered judgments");
    evaluate->add_option("--filter-report", eval_filter_report,
                         "filter_report.json to embed");
    evaluate->add_option("--out", eval_out, "Output directory")->required();
    evaluate->add_flag("--csv", eval_csv, "Also write scores.csv");
    eval_metrics.add_options(evaluate);

    // report
    auto* report = app.add_subcommand("report", "Render report.json as tables");
    std::string report_path;
    report->add_option("--report", report_path, "report.json")->required();

    // mock-serve
    auto* mock = app.add_subcommand("mock-serve",
                                    "Deterministic chat-completions server");
    std::string mock_fixtures, mock_fallback, mock_schedule, mock_port_file;
    int mock_port = 8089;
    mock->add_option("--fixtures", mock_fixtures, "Fixture directory");
    mock->add_option("--port", mock_port, "Port (0 = ephemeral)");
    mock->add_option("--fallback", mock_fallback,
                     "Content served for unknown fingerprints");
    mock->add_option("--schedule", mock_schedule,
                     "JSON file with {\"statuses\": [...]} replayed in order");
    mock->add_option("--port-file", mock_port_file,
                     "Write the bound port to this file");

    // run
    auto* run = app.add_subcommand("run", "judge + filter + evaluate");
    std::string run_segments, run_gold, run_out;
    bool run_csv = false, run_no_dedupe = false, run_no_halluc = false;
    ClientArgs run_client;
    MetricArgs run_metrics;
    run->add_option("--segments", run_segments, "segments.jsonl")->required();
    run->add_option("--gold", run_gold, "gold.jsonl")->required();
    run->add_option("--out", run_out, "Output directory")->required();
    run->add_flag("--csv", run_csv, "Also write scores.csv");
    run->add_flag("--no-dedupe", run_no_dedupe, "Skip cross-severity dedup");
    run->add_flag("--no-hallucination-filter", run_no_halluc,
                  "Skip the hallucinated-span filter");
    run_client.add_options(run);
    run_metrics.add_options(run);

    CLI11_PARSE(app, argc, argv);

    if (log_level == "debug") set_log_level(LogLevel::kDebug);
    else if (log_level == "warn") set_log_level(LogLevel::kWarn);
    else if (log_level == "error") set_log_level(LogLevel::kError);

    try {
        if (judge->parsed()) {
            auto segments = load_segments(judge_segments);
            LlmClient client(judge_client.to_config());
            JudgeStageResult result = run_judge_stage(segments, client);
            return write_judge_outputs(result, judge_out);
        }

        if (filter->parsed()) {
            filter_options.dedupe = !no_dedupe;
            filter_options.hallucination = !no_halluc;
            auto segments = load_segments(filter_segments);
            auto judgments = load_judgments(filter_judgments);
            FilterStageResult result =
                run_filter_stage(judgments, segments, filter_options);
            write_filter_outputs(result, filter_out);
            log_info("filter stage finished",
                     {{"before", result.report["total"]["before"]},
                      {"after", result.report["total"]["after"]}});
            return kExitOk;
        }

        if (evaluate->parsed()) {
            auto segments = load_segments(eval_segments);
            auto gold = load_gold(eval_gold);
            std::optional<std::vector<JudgmentRecord>> unfiltered, filtered_records;
            if (!eval_judgments.empty()) unfiltered = load_judgments(eval_judgments);
            if (!eval_filtered.empty()) filtered_records = load_judgments(eval_filtered);
            std::optional<nlohmann::json> filter_report;
            if (!eval_filter_report.empty()) {
                filter_report = nlohmann::json::parse(read_text_file(eval_filter_report));
            }
            EvalOutputs outputs = run_evaluate_stage(
                segments, gold, unfiltered ? &*unfiltered : nullptr,
                filtered_records ? &*filtered_records : nullptr,
                filter_report ? &*filter_report : nullptr,
                eval_metrics.to_options());
            write_eval_outputs(outputs, eval_out, eval_csv);
            log_info("evaluate stage finished", {{"out", eval_out}});
            return kExitOk;
        }

        if (report->parsed()) {
            auto report_json = nlohmann::json::parse(read_text_file(report_path));
            std::cout << render_report_markdown(report_json);
            return kExitOk;
        }

        if (mock->parsed()) {
            MockServerOptions options;
            if (!mock_fixtures.empty()) options.fixture_dir = mock_fixtures;
            if (!mock_fallback.empty()) options.fallback_content = mock_fallback;
            if (!mock_schedule.empty()) {
                auto schedule = nlohmann::json::parse(read_text_file(mock_schedule));
                options.failure_schedule =
                    schedule.at("statuses").get<std::vector<int>>();
            }
            MockServer server(std::move(options));
            int port = server.start(mock_port);
            if (!mock_port_file.empty()) {
                write_text_file(mock_port_file, std::to_string(port) + "\n");
            }
            log_info("mock server listening", {{"port", port}});
            std::signal(SIGINT, [](int) { g_interrupted.store(true); });
            std::signal(SIGTERM, [](int) { g_interrupted.store(true); });
            while (!g_interrupted.load()) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
            server.stop();
            return kExitOk;
        }

        if (run->parsed()) {
            auto segments = load_segments(run_segments);
            auto gold = load_gold(run_gold);
            LlmClient client(run_client.to_config());
            JudgeStageResult judged = run_judge_stage(segments, client);
            int judge_exit = write_judge_outputs(judged, run_out);
            if (judge_exit == kExitFatal) return kExitFatal;

            FilterOptions options;
            options.dedupe = !run_no_dedupe;
            options.hallucination = !run_no_halluc;
            FilterStageResult filtered =
                run_filter_stage(judged.judgments, segments, options);
            write_filter_outputs(filtered, run_out);

            try {
                nlohmann::json filter_report = filtered.report;
                EvalOutputs outputs = run_evaluate_stage(
                    segments, gold, &judged.judgments, &filtered.filtered,
                    &filter_report, run_metrics.to_options());
                write_eval_outputs(outputs, run_out, run_csv);
            } catch (const std::exception& e) {
                if (judge_exit == kExitPartial) {
                    // Root cause is the partial judge stage; report that.
                    log_error("evaluate skipped after partial judge stage",
                              {{"error", e.what()}});
                    return kExitPartial;
                }
                throw;
            }
            log_info("run finished", {{"out", run_out}});
            return judge_exit;
        }
    } catch (const std::exception& e) {
        log_error("fatal", {{"error", e.what()}});
        return kExitFatal;
    }
    return kExitFatal;
}
