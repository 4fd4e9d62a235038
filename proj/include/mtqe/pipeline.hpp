#pragma once

#include "mtqe/filtering.hpp"
#include "mtqe/ingestion.hpp"
#include "mtqe/llm_client.hpp"
#include "mtqe/meta_metrics.hpp"
#include "mtqe/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mtqe {

// One row of judgments.jsonl / filtered.jsonl.
struct JudgmentRecord {
    std::string item_id;
    std::string system_id;
    std::string model;
    QEJudgment judgment;
};

nlohmann::ordered_json judgment_record_to_json(const JudgmentRecord& record);
JudgmentRecord judgment_record_from_json(const nlohmann::json& row,
                                         const std::string& location);
std::vector<JudgmentRecord> load_judgments(const std::filesystem::path& path);

// judge: prompts -> completions -> repaired, validated judgments.
struct JudgeStageResult {
    std::vector<nlohmann::ordered_json> raw_rows;  // raw_completions.jsonl
    std::vector<JudgmentRecord> judgments;         // successful segments only
    std::size_t failed_segments = 0;
};
JudgeStageResult run_judge_stage(const std::vector<Segment>& segments,
                                 LlmClient& client);

// filter: hallucination + cross-severity dedup with Table-2-style
// accounting per (model, language pair).
struct FilterStageResult {
    std::vector<JudgmentRecord> filtered;
    nlohmann::ordered_json report;  // filter_report.json
};
FilterStageResult run_filter_stage(const std::vector<JudgmentRecord>& judgments,
                                   const std::vector<Segment>& segments,
                                   const FilterOptions& options);

struct EvalOptions {
    int resamples = kDefaultResamples;
    std::uint64_t seed = 0;
    SeverityMap severity_map;
    bool scores_only = false;  // skip span metrics
    bool iaa = false;          // annotator-vs-annotator instead of metric-vs-human
};

struct EvalOutputs {
    nlohmann::ordered_json report;               // report.json
    std::string report_md;                       // report.md
    std::vector<nlohmann::ordered_json> predicted_spans;  // predicted_spans.jsonl
    std::string scores_csv;  // language_pair,system,metric_score,human_score
};

// Meta-evaluation over every language pair present in the data. Score
// matrices require exact coverage: every gold segment needs a scored
// judgment. Span metrics run for whichever of unfiltered/filtered was
// given; the rejection table is embedded when filter_report is given.
EvalOutputs run_evaluate_stage(const std::vector<Segment>& segments,
                               const std::vector<GoldAnnotation>& gold,
                               const std::vector<JudgmentRecord>* unfiltered,
                               const std::vector<JudgmentRecord>* filtered,
                               const nlohmann::json* filter_report,
                               const EvalOptions& options);

// report.md rendering of an existing report.json (the `report` subcommand).
std::string render_report_markdown(const nlohmann::json& report);

}  // namespace mtqe
