#include "mtqe/ingestion.hpp"

#include "mtqe/error.hpp"
#include "mtqe/jsonl.hpp"

#include <set>

namespace mtqe {

namespace {

std::string where(const std::filesystem::path& path, std::size_t lineno) {
    return path.string() + ":" + std::to_string(lineno);
}

const nlohmann::json& require_field(const nlohmann::json& obj,
                                    const char* key,
                                    const std::string& location) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw DataError(location + ": missing field '" + std::string(key) + "'");
    }
    return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key,
                           const std::string& location) {
    const auto& v = require_field(obj, key, location);
    if (!v.is_string()) {
        throw DataError(location + ": field '" + std::string(key) +
                        "' must be a string");
    }
    return v.get<std::string>();
}

}  // namespace

std::vector<Segment> load_segments(const std::filesystem::path& path) {
    std::vector<Segment> segments;
    std::set<SegmentKey> seen;
    for_each_jsonl(path, [&](const nlohmann::json& row, std::size_t lineno) {
        std::string loc = where(path, lineno);
        if (!row.is_object()) throw DataError(loc + ": record is not an object");
        Segment seg;
        seg.item_id = require_string(row, "item_id", loc);
        seg.system_id = require_string(row, "system_id", loc);
        seg.pair.source_lang = require_string(row, "src_lang", loc);
        seg.pair.target_lang = require_string(row, "tgt_lang", loc);
        seg.source = require_string(row, "source", loc);
        seg.target = require_string(row, "target", loc);
        if (seg.pair.source_lang.empty() || seg.pair.target_lang.empty()) {
            throw DataError(loc + ": language names must be non-empty");
        }
        if (seg.pair.source_lang == seg.pair.target_lang) {
            throw DataError(loc + ": src_lang equals tgt_lang");
        }
        if (seg.source.empty()) throw DataError(loc + ": source must be non-empty");
        seg.pair.code = language_pair_code(seg.pair.source_lang, seg.pair.target_lang);
        if (!seen.insert(segment_key(seg)).second) {
            throw DataError(loc + ": duplicate (item_id, system_id) = (" +
                            seg.item_id + ", " + seg.system_id + ")");
        }
        segments.push_back(std::move(seg));
    });
    return segments;
}

std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path) {
    std::vector<GoldAnnotation> gold;
    std::map<SegmentKey, std::set<std::string>> annotators;
    for_each_jsonl(path, [&](const nlohmann::json& row, std::size_t lineno) {
        std::string loc = where(path, lineno);
        if (!row.is_object()) throw DataError(loc + ": record is not an object");
        GoldAnnotation g;
        g.item_id = require_string(row, "item_id", loc);
        g.system_id = require_string(row, "system_id", loc);
        g.annotator_id = require_string(row, "annotator_id", loc);
        const auto& score = require_field(row, "score", loc);
        if (!score.is_number()) throw DataError(loc + ": score must be a number");
        g.score = score.get<double>();
        if (g.score < 0.0 || g.score > 100.0) {
            throw DataError(loc + ": score outside [0,100]");
        }
        const auto& spans = require_field(row, "spans", loc);
        if (!spans.is_array()) throw DataError(loc + ": spans must be an array");
        for (const auto& span : spans) {
            if (!span.is_object()) throw DataError(loc + ": span is not an object");
            CharSpan cs;
            const auto& start = require_field(span, "start", loc);
            const auto& end = require_field(span, "end", loc);
            if (!start.is_number_integer() || !end.is_number_integer()) {
                throw DataError(loc + ": span indices must be integers");
            }
            auto s = start.get<std::int64_t>();
            auto e = end.get<std::int64_t>();
            if (s < 0 || e <= s) {
                throw DataError(loc + ": span must satisfy 0 <= start < end");
            }
            cs.start = static_cast<std::size_t>(s);
            cs.end = static_cast<std::size_t>(e);
            std::string sev = require_string(span, "severity", loc);
            // Gold ESA severities are minor/major only; anything else is a
            // schema violation, not a silently mapped value.
            if (sev != "minor" && sev != "major") {
                throw DataError(loc + ": gold span severity must be minor or major, got '" +
                                sev + "'");
            }
            cs.severity = *severity_from_name(sev);
            g.spans.push_back(cs);
        }
        auto& ids = annotators[{g.item_id, g.system_id}];
        ids.insert(g.annotator_id);
        if (ids.size() > 2) {
            throw DataError(loc + ": more than two annotators for (" +
                            g.item_id + ", " + g.system_id + ")");
        }
        gold.push_back(std::move(g));
    });
    return gold;
}

double gold_score(const std::vector<GoldAnnotation>& annotations) {
    if (annotations.empty()) {
        throw DataError("gold_score: no annotations for segment");
    }
    double sum = 0.0;
    for (const auto& a : annotations) sum += a.score;
    return sum / static_cast<double>(annotations.size());
}

std::map<SegmentKey, std::vector<GoldAnnotation>> group_gold(
    const std::vector<GoldAnnotation>& gold) {
    std::map<SegmentKey, std::vector<GoldAnnotation>> grouped;
    for (const auto& g : gold) {
        grouped[{g.item_id, g.system_id}].push_back(g);
    }
    return grouped;
}

nlohmann::ordered_json segment_to_json(const Segment& s) {
    return nlohmann::ordered_json{
        {"item_id", s.item_id},   {"system_id", s.system_id},
        {"src_lang", s.pair.source_lang}, {"tgt_lang", s.pair.target_lang},
        {"source", s.source},     {"target", s.target},
    };
}

nlohmann::ordered_json gold_to_json(const GoldAnnotation& g) {
    nlohmann::ordered_json spans = nlohmann::ordered_json::array();
    for (const auto& span : g.spans) {
        spans.push_back({{"start", span.start},
                         {"end", span.end},
                         {"severity", std::string(severity_name(span.severity))}});
    }
    return nlohmann::ordered_json{{"item_id", g.item_id},
                                  {"system_id", g.system_id},
                                  {"annotator_id", g.annotator_id},
                                  {"score", g.score},
                                  {"spans", std::move(spans)}};
}

}  // namespace mtqe
