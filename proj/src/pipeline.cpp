#include "mtqe/pipeline.hpp"

#include "mtqe/error.hpp"
#include "mtqe/json_repair.hpp"
#include "mtqe/jsonl.hpp"
#include "mtqe/log.hpp"
#include "mtqe/span_alignment.hpp"
#include "mtqe/unicode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace mtqe {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json annotation_to_json(const ErrorAnnotation& ann) {
    auto opt = [](const std::optional<std::string>& v) {
        return v ? ordered_json(*v) : ordered_json(nullptr);
    };
    return ordered_json{{"type", ann.type_path},
                        {"source_error", opt(ann.source_error)},
                        {"target_error", opt(ann.target_error)},
                        {"correction", opt(ann.correction)},
                        {"short_desc", opt(ann.short_desc)}};
}

ErrorAnnotation annotation_from_json(const json& v, Severity severity,
                                     const std::string& location) {
    if (!v.is_object()) {
        throw DataError(location + ": annotation is not an object");
    }
    ErrorAnnotation ann;
    ann.severity = severity;
    auto opt = [&](const char* key) -> std::optional<std::string> {
        auto it = v.find(key);
        if (it == v.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) {
            throw DataError(location + ": annotation field '" + key +
                            "' must be a string or null");
        }
        return it->get<std::string>();
    };
    if (auto type = opt("type")) ann.type_path = *type;
    ann.source_error = opt("source_error");
    ann.target_error = opt("target_error");
    ann.correction = opt("correction");
    ann.short_desc = opt("short_desc");
    if (!ann.source_error && !ann.target_error) {
        throw DataError(location +
                        ": annotation lacks both source_error and target_error");
    }
    return ann;
}

std::string round1_str(double percent) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", percent);
    return buf;
}

double round1(double percent) {
    return std::round(percent * 10.0) / 10.0;
}

std::string format_fixed(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", places, v);
    return buf;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

ordered_json judgment_record_to_json(const JudgmentRecord& record) {
    const QEJudgment& j = record.judgment;
    ordered_json errors;
    for (const char* name : {"critical", "major", "minor"}) {
        ordered_json list = ordered_json::array();
        for (const auto& ann : j.list(*severity_from_name(name))) {
            list.push_back(annotation_to_json(ann));
        }
        errors[name] = std::move(list);
    }
    return ordered_json{
        {"item_id", record.item_id},
        {"system_id", record.system_id},
        {"model", record.model},
        {"score", j.score ? ordered_json(*j.score) : ordered_json(nullptr)},
        {"post_edited_translation", j.post_edited_translation},
        {"errors", std::move(errors)},
        {"warnings", j.parse_warnings},
    };
}

JudgmentRecord judgment_record_from_json(const json& row,
                                         const std::string& location) {
    if (!row.is_object()) throw DataError(location + ": record is not an object");
    JudgmentRecord record;
    auto str = [&](const char* key) {
        auto it = row.find(key);
        if (it == row.end() || !it->is_string()) {
            throw DataError(location + ": missing string field '" +
                            std::string(key) + "'");
        }
        return it->get<std::string>();
    };
    record.item_id = str("item_id");
    record.system_id = str("system_id");
    record.model = row.value("model", "");

    auto score = row.find("score");
    if (score != row.end() && !score->is_null()) {
        if (!score->is_number()) {
            throw DataError(location + ": score must be a number or null");
        }
        record.judgment.score = score->get<double>();
    }
    record.judgment.post_edited_translation =
        row.value("post_edited_translation", "");
    auto errors = row.find("errors");
    if (errors != row.end()) {
        if (!errors->is_object()) {
            throw DataError(location + ": errors must be an object");
        }
        for (const auto& [sev_name, list] : errors->items()) {
            auto severity = severity_from_name(sev_name);
            if (!severity) {
                throw DataError(location + ": unknown severity list '" + sev_name + "'");
            }
            if (!list.is_array()) {
                throw DataError(location + ": severity list '" + sev_name +
                                "' must be an array");
            }
            for (const auto& item : list) {
                record.judgment.list(*severity).push_back(
                    annotation_from_json(item, *severity, location));
            }
        }
    }
    if (auto warnings = row.find("warnings"); warnings != row.end()) {
        record.judgment.parse_warnings =
            warnings->get<std::vector<std::string>>();
    }
    return record;
}

std::vector<JudgmentRecord> load_judgments(const std::filesystem::path& path) {
    std::vector<JudgmentRecord> records;
    for_each_jsonl(path, [&](const json& row, std::size_t lineno) {
        records.push_back(judgment_record_from_json(
            row, path.string() + ":" + std::to_string(lineno)));
    });
    return records;
}

JudgeStageResult run_judge_stage(const std::vector<Segment>& segments,
                                 LlmClient& client) {
    JudgeStageResult result;
    std::vector<RawCompletion> completions = client.run_batch(segments);
    result.raw_rows.reserve(completions.size());
    for (const RawCompletion& completion : completions) {
        result.raw_rows.push_back(raw_completion_to_json(completion));
        if (!completion.ok()) {
            ++result.failed_segments;
            continue;
        }
        try {
            JudgmentRecord record;
            record.item_id = completion.item_id;
            record.system_id = completion.system_id;
            record.model = completion.model_name;
            record.judgment = judgment_from_raw(completion.raw_text);
            record.judgment.parse_warnings.insert(
                record.judgment.parse_warnings.begin(),
                completion.warnings.begin(), completion.warnings.end());
            result.judgments.push_back(std::move(record));
        } catch (const std::exception& e) {
            ++result.failed_segments;
            log_error("judgment unusable",
                      {{"item_id", completion.item_id},
                       {"system_id", completion.system_id},
                       {"error", e.what()}});
        }
    }
    return result;
}

FilterStageResult run_filter_stage(const std::vector<JudgmentRecord>& judgments,
                                   const std::vector<Segment>& segments,
                                   const FilterOptions& options) {
    std::map<SegmentKey, const Segment*> by_key;
    for (const auto& seg : segments) by_key[segment_key(seg)] = &seg;

    FilterStageResult result;
    result.filtered.reserve(judgments.size());
    // (model, lp code) -> accounting
    std::map<std::pair<std::string, std::string>, FilterReport> reports;
    FilterReport total;

    for (const auto& record : judgments) {
        auto it = by_key.find({record.item_id, record.system_id});
        if (it == by_key.end()) {
            throw DataError("filter: no segment for (" + record.item_id + ", " +
                            record.system_id + ")");
        }
        FilterReport report;
        JudgmentRecord out = record;
        out.judgment = apply_filters(record.judgment, it->second->target,
                                     options, report);
        reports[{record.model, it->second->pair.code}].add(report);
        total.add(report);
        result.filtered.push_back(std::move(out));
    }

    auto report_json = [](const FilterReport& r) {
        auto severity_counts = [](const std::array<std::size_t, 3>& counts) {
            return ordered_json{{"minor", counts[0]},
                                {"major", counts[1]},
                                {"critical", counts[2]}};
        };
        return ordered_json{
            {"before", r.errors_before},
            {"after", r.errors_after},
            {"rejected_hallucinated", r.rejected_hallucinated},
            {"rejected_duplicates", r.rejected_duplicates},
            {"rejection_rate_percent", round1(rejection_rate(r))},
            {"before_by_severity", severity_counts(r.before_by_severity)},
            {"after_by_severity", severity_counts(r.after_by_severity)},
        };
    };

    ordered_json models = ordered_json::object();
    for (const auto& [key, report] : reports) {
        models[key.first]["language_pairs"][key.second] = report_json(report);
    }
    result.report = ordered_json{{"models", std::move(models)},
                                 {"total", report_json(total)}};
    return result;
}

namespace {

struct LanguagePairData {
    std::string code;
    std::vector<SegmentKey> keys;  // sorted
};

// Per-variant span accounting for one language pair.
struct SpanVariantCounts {
    SpanCounts counts;
    std::vector<ordered_json> span_rows;
};

SpanVariantCounts accumulate_spans(
    const std::vector<SegmentKey>& keys,
    const std::map<SegmentKey, const Segment*>& segments,
    const std::map<SegmentKey, const JudgmentRecord*>& judgments,
    const std::map<SegmentKey, std::vector<CharSpan>>& gold_spans,
    const SeverityMap& severity_map) {
    SpanVariantCounts out;
    for (const auto& key : keys) {
        const Segment* segment = segments.at(key);
        const JudgmentRecord* record = judgments.at(key);
        // Alignment requires the hallucination-filter contract; applying
        // the filter here is idempotent for already-filtered rows and
        // makes raw judgment files acceptable too.
        QEJudgment safe = filter_hallucinated(record->judgment, segment->target);
        SpanAlignment aligned = locate_spans(safe, segment->target);
        for (const auto& warning : aligned.warnings) {
            log_warn("span alignment",
                     {{"item_id", key.first}, {"system_id", key.second},
                      {"detail", warning}});
        }
        std::size_t target_len = codepoint_count(segment->target);
        auto gold_it = gold_spans.find(key);
        static const std::vector<CharSpan> kNoSpans;
        const auto& gold = gold_it != gold_spans.end() ? gold_it->second : kNoSpans;
        out.counts.add(span_overlap(aligned.spans, gold, severity_map, target_len));

        ordered_json spans = ordered_json::array();
        for (const auto& span : aligned.spans) {
            spans.push_back({{"start", span.start},
                             {"end", span.end},
                             {"severity", std::string(severity_name(span.severity))}});
        }
        out.span_rows.push_back(ordered_json{{"item_id", key.first},
                                             {"system_id", key.second},
                                             {"spans", std::move(spans)}});
    }
    return out;
}

ordered_json span_metrics_to_json(const SpanMetrics& m) {
    return ordered_json{{"precision", m.precision},
                        {"recall", m.recall},
                        {"f1", m.f1},
                        {"matched_weight", m.counts.matched_weight},
                        {"predicted_chars", m.counts.predicted_chars},
                        {"gold_chars", m.counts.gold_chars}};
}

ordered_json severity_map_to_json(const SeverityMap& map) {
    return ordered_json{
        {"critical", std::string(severity_name(map.critical))},
        {"major", std::string(severity_name(map.major))},
        {"minor", std::string(severity_name(map.minor))}};
}

}  // namespace

EvalOutputs run_evaluate_stage(const std::vector<Segment>& segments,
                               const std::vector<GoldAnnotation>& gold,
                               const std::vector<JudgmentRecord>* unfiltered,
                               const std::vector<JudgmentRecord>* filtered,
                               const json* filter_report,
                               const EvalOptions& options) {
    std::map<SegmentKey, const Segment*> segment_by_key;
    for (const auto& seg : segments) segment_by_key[segment_key(seg)] = &seg;

    // Validate gold against segments: keys must exist, spans must fit.
    auto grouped_gold = group_gold(gold);
    std::vector<std::string> gaps;
    for (const auto& [key, annotations] : grouped_gold) {
        auto it = segment_by_key.find(key);
        if (it == segment_by_key.end()) {
            gaps.push_back(key.first + "/" + key.second);
            continue;
        }
        std::size_t target_len = codepoint_count(it->second->target);
        for (const auto& g : annotations) {
            for (const auto& span : g.spans) {
                if (span.end > target_len) {
                    throw DataError("gold span [" + std::to_string(span.start) +
                                    "," + std::to_string(span.end) +
                                    ") out of bounds for (" + key.first + ", " +
                                    key.second + "), target has " +
                                    std::to_string(target_len) + " characters");
                }
            }
        }
        if (annotations.size() == 1) {
            log_warn("segment has a single annotator",
                     {{"item_id", key.first}, {"system_id", key.second}});
        }
    }
    if (!gaps.empty()) {
        std::string msg = "gold refers to unknown segments:";
        for (std::size_t i = 0; i < std::min<std::size_t>(gaps.size(), 20); ++i) {
            msg += " " + gaps[i];
        }
        if (gaps.size() > 20) msg += " (+" + std::to_string(gaps.size() - 20) + " more)";
        throw DataError(msg);
    }

    // Group gold keys by language pair.
    std::map<std::string, LanguagePairData> pairs;
    for (const auto& [key, _] : grouped_gold) {
        const Segment* seg = segment_by_key.at(key);
        auto& lp = pairs[seg->pair.code];
        lp.code = seg->pair.code;
        lp.keys.push_back(key);
    }
    if (pairs.empty()) throw DataError("no gold annotations to evaluate");

    EvalOutputs outputs;
    ordered_json lp_reports = ordered_json::object();
    std::ostringstream csv;
    csv << "language_pair,system,metric_score,human_score\n";

    double spa_sum = 0.0, acc_sum = 0.0;
    std::size_t lp_count = 0;

    if (options.iaa) {
        for (auto& [code, lp] : pairs) {
            std::vector<GoldAnnotation> subset;
            for (const auto& key : lp.keys) {
                for (const auto& g : grouped_gold.at(key)) subset.push_back(g);
            }
            IaaResult iaa =
                inter_annotator_agreement(subset, options.resamples, options.seed);
            lp_reports[code] = ordered_json{
                {"systems", iaa.systems},
                {"items", iaa.items},
                {"spa", iaa.spa},
                {"segment_accuracy",
                 ordered_json{{"accuracy", iaa.segment_accuracy.accuracy},
                              {"epsilon", iaa.segment_accuracy.epsilon},
                              {"pairs", iaa.segment_accuracy.pairs}}},
            };
            spa_sum += iaa.spa;
            acc_sum += iaa.segment_accuracy.accuracy;
            ++lp_count;
        }
    } else {
        if (!unfiltered && !filtered) {
            throw DataError("evaluate: judgments required unless --iaa is set");
        }
        // Judgments indexed by key; filtered takes precedence for scores.
        auto index = [](const std::vector<JudgmentRecord>* records) {
            std::map<SegmentKey, const JudgmentRecord*> map;
            if (records) {
                for (const auto& r : *records) map[{r.item_id, r.system_id}] = &r;
            }
            return map;
        };
        auto unfiltered_by_key = index(unfiltered);
        auto filtered_by_key = index(filtered);
        const auto& scoring = filtered ? filtered_by_key : unfiltered_by_key;

        // Coverage: every gold segment needs a scored judgment, and every
        // judgment variant that was supplied must cover every gold segment.
        std::vector<std::string> missing;
        for (const auto& [key, _] : grouped_gold) {
            auto it = scoring.find(key);
            if (it == scoring.end() || !it->second->judgment.score) {
                missing.push_back(key.first + "/" + key.second);
                continue;
            }
            if (unfiltered && !unfiltered_by_key.count(key)) {
                missing.push_back(key.first + "/" + key.second + " (unfiltered)");
            }
            if (filtered && !filtered_by_key.count(key)) {
                missing.push_back(key.first + "/" + key.second + " (filtered)");
            }
        }
        if (!missing.empty()) {
            std::string msg = "coverage mismatch, no scored judgment for:";
            for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 20); ++i) {
                msg += " " + missing[i];
            }
            if (missing.size() > 20) {
                msg += " (+" + std::to_string(missing.size() - 20) + " more)";
            }
            throw DataError(msg);
        }

        for (auto& [code, lp] : pairs) {
            std::map<std::pair<std::string, std::string>, double> metric_scores,
                human_scores;
            std::map<SegmentKey, std::vector<CharSpan>> gold_spans;
            for (const auto& key : lp.keys) {
                const auto& annotations = grouped_gold.at(key);
                human_scores[{key.first, key.second}] = gold_score(annotations);
                metric_scores[{key.first, key.second}] =
                    *scoring.at(key)->judgment.score;
                auto& pooled = gold_spans[key];
                for (const auto& g : annotations) {
                    pooled.insert(pooled.end(), g.spans.begin(), g.spans.end());
                }
            }
            ScoreMatrix human = build_score_matrix(human_scores);
            ScoreMatrix metric = build_score_matrix(metric_scores);

            double spa = soft_pairwise_accuracy(metric, human, options.resamples,
                                                options.seed);
            TieCalibration tie = tie_calibrated_accuracy(metric, human);
            spa_sum += spa;
            acc_sum += tie.accuracy;
            ++lp_count;

            ordered_json lp_report{
                {"systems", metric.systems.size()},
                {"items", metric.items.size()},
                {"spa", spa},
                {"segment_accuracy",
                 ordered_json{{"accuracy", tie.accuracy},
                              {"epsilon", tie.epsilon},
                              {"pairs", tie.pairs}}},
            };

            if (!options.scores_only) {
                ordered_json span_report = ordered_json::object();
                if (unfiltered) {
                    auto counts = accumulate_spans(lp.keys, segment_by_key,
                                                   unfiltered_by_key, gold_spans,
                                                   options.severity_map);
                    span_report["unfiltered"] =
                        span_metrics_to_json(span_metrics_from_counts(counts.counts));
                    if (!filtered) {
                        for (auto& row : counts.span_rows) {
                            outputs.predicted_spans.push_back(std::move(row));
                        }
                    }
                }
                if (filtered) {
                    auto counts = accumulate_spans(lp.keys, segment_by_key,
                                                   filtered_by_key, gold_spans,
                                                   options.severity_map);
                    span_report["filtered"] =
                        span_metrics_to_json(span_metrics_from_counts(counts.counts));
                    for (auto& row : counts.span_rows) {
                        outputs.predicted_spans.push_back(std::move(row));
                    }
                }
                lp_report["span"] = std::move(span_report);
            }

            auto metric_means = system_scores(metric);
            auto human_means = system_scores(human);
            ordered_json means{{"metric", ordered_json::object()},
                               {"human", ordered_json::object()}};
            for (const auto& [system, mean] : metric_means) {
                means["metric"][system] = mean;
                means["human"][system] = human_means.at(system);
                csv << code << "," << system << "," << format_number(mean) << ","
                    << format_number(human_means.at(system)) << "\n";
            }
            lp_report["system_scores"] = std::move(means);
            lp_reports[code] = std::move(lp_report);
        }
    }

    ordered_json report{
        {"mode", options.iaa ? "inter-annotator" : "metric-vs-human"},
        {"config",
         ordered_json{{"resamples", options.resamples},
                      {"seed", options.seed},
                      {"severity_map", severity_map_to_json(options.severity_map)},
                      {"scores_only", options.scores_only}}},
        {"language_pairs", std::move(lp_reports)},
    };
    if (lp_count > 1) {
        report["average"] =
            ordered_json{{"spa", spa_sum / static_cast<double>(lp_count)},
                         {"segment_accuracy",
                          acc_sum / static_cast<double>(lp_count)}};
    }
    if (filter_report) report["rejection"] = *filter_report;

    outputs.report = std::move(report);
    outputs.report_md = render_report_markdown(outputs.report);
    outputs.scores_csv = csv.str();
    return outputs;
}

std::string render_report_markdown(const json& report) {
    std::ostringstream md;
    md << "# Translation QE meta-evaluation\n\n";
    bool iaa = report.value("mode", "") == "inter-annotator";
    if (iaa) {
        md << "Mode: inter-annotator agreement (annotator 2 scored against "
              "annotator 1).\n\n";
    }

    const auto& lps = report.at("language_pairs");

    md << "## System level: Soft Pairwise Accuracy\n\n";
    md << "| Language pair | Systems | Items | SPA |\n";
    md << "|---|---:|---:|---:|\n";
    for (const auto& [code, lp] : lps.items()) {
        md << "| " << code << " | " << lp.at("systems").get<std::size_t>()
           << " | " << lp.at("items").get<std::size_t>() << " | "
           << format_fixed(lp.at("spa").get<double>(), 3) << " |\n";
    }
    if (report.contains("average")) {
        md << "| average |  |  | "
           << format_fixed(report["average"]["spa"].get<double>(), 3) << " |\n";
    }
    md << "\n";

    md << "## Segment level: group-by-item accuracy with tie calibration\n\n";
    md << "| Language pair | Accuracy | Epsilon | Pairs |\n";
    md << "|---|---:|---:|---:|\n";
    for (const auto& [code, lp] : lps.items()) {
        const auto& acc = lp.at("segment_accuracy");
        md << "| " << code << " | "
           << format_fixed(acc.at("accuracy").get<double>(), 3) << " | "
           << format_number(acc.at("epsilon").get<double>()) << " | "
           << acc.at("pairs").get<std::size_t>() << " |\n";
    }
    if (report.contains("average")) {
        md << "| average | "
           << format_fixed(report["average"]["segment_accuracy"].get<double>(), 3)
           << " |  |  |\n";
    }
    md << "\n";

    bool any_span = false;
    for (const auto& [code, lp] : lps.items()) {
        if (lp.contains("span") && !lp["span"].empty()) any_span = true;
    }
    if (any_span) {
        md << "## Span detection (character level, %)\n\n";
        md << "| Language pair | Errors | Precision | Recall | F1 |\n";
        md << "|---|---|---:|---:|---:|\n";
        for (const auto& [code, lp] : lps.items()) {
            if (!lp.contains("span")) continue;
            for (const char* variant : {"unfiltered", "filtered"}) {
                if (!lp["span"].contains(variant)) continue;
                const auto& m = lp["span"][variant];
                md << "| " << code << " | " << variant << " | "
                   << format_fixed(m.at("precision").get<double>() * 100.0, 2)
                   << " | "
                   << format_fixed(m.at("recall").get<double>() * 100.0, 2)
                   << " | " << format_fixed(m.at("f1").get<double>() * 100.0, 2)
                   << " |\n";
            }
        }
        md << "\n";
    }

    if (report.contains("rejection")) {
        md << "## Error filtering\n\n";
        md << "| Model | Language pair | Before | After | Rejection rate |\n";
        md << "|---|---|---:|---:|---:|\n";
        const auto& rejection = report["rejection"];
        if (rejection.contains("models")) {
            for (const auto& [model, entry] : rejection["models"].items()) {
                for (const auto& [code, r] : entry.at("language_pairs").items()) {
                    md << "| " << model << " | " << code << " | "
                       << r.at("before").get<std::size_t>() << " | "
                       << r.at("after").get<std::size_t>() << " | "
                       << round1_str(r.at("rejection_rate_percent").get<double>())
                       << "% |\n";
                }
            }
        }
        if (rejection.contains("total")) {
            const auto& r = rejection["total"];
            md << "| total |  | " << r.at("before").get<std::size_t>() << " | "
               << r.at("after").get<std::size_t>() << " | "
               << round1_str(r.at("rejection_rate_percent").get<double>())
               << "% |\n";
        }
        md << "\n";
    }
    return md.str();
}

}  // namespace mtqe
