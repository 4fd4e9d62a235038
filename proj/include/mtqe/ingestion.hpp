#pragma once

#include "mtqe/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mtqe {

// segments.jsonl: {"item_id", "system_id", "src_lang", "tgt_lang",
// "source", "target"}. Records come back in file order; a duplicate
// (item_id, system_id) or any schema violation raises DataError with the
// offending line number.
std::vector<Segment> load_segments(const std::filesystem::path& path);

// gold.jsonl: {"item_id", "system_id", "annotator_id", "score",
// "spans": [{"start", "end", "severity"}]} with end exclusive and severity
// one of minor|major. More than two annotators per segment is an error.
std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path);

// Mean of the available annotator scores (one or two). A single annotation
// is accepted; the caller decides whether to warn. Empty input raises.
double gold_score(const std::vector<GoldAnnotation>& annotations);

using SegmentKey = std::pair<std::string, std::string>;  // (item_id, system_id)

inline SegmentKey segment_key(const Segment& s) {
    return {s.item_id, s.system_id};
}

// Gold annotations grouped by segment, preserving file order within a key.
std::map<SegmentKey, std::vector<GoldAnnotation>> group_gold(
    const std::vector<GoldAnnotation>& gold);

nlohmann::ordered_json segment_to_json(const Segment& s);
nlohmann::ordered_json gold_to_json(const GoldAnnotation& g);

}  // namespace mtqe
