#include "mtqe/span_alignment.hpp"

#include "mtqe/error.hpp"
#include "mtqe/unicode.hpp"

#include <algorithm>
#include <map>

namespace mtqe {

SpanAlignment locate_spans(const QEJudgment& judgment,
                           const std::string& target) {
    FoldedText folded_target(target);
    SpanAlignment result;
    // Next folded search position per folded phrase.
    std::map<std::u32string, std::size_t> cursor;

    for (Severity severity : kSeveritiesBySalience) {
        for (const auto& ann : judgment.list(severity)) {
            if (!ann.target_error) continue;
            std::u32string needle = casefold(decode_utf8(*ann.target_error));
            if (needle.empty()) {
                result.warnings.push_back("empty target_error has no span");
                continue;
            }
            auto [it, inserted] = cursor.try_emplace(needle, 0);
            auto match = folded_target.find(needle, it->second);
            if (!match) {
                if (inserted) {
                    // First sighting of the phrase and no occurrence at all:
                    // the hallucination filter should have removed it.
                    throw Error("span alignment: phrase '" + *ann.target_error +
                                "' does not occur in target (filter contract violated)");
                }
                result.warnings.push_back(
                    "surplus annotation '" + *ann.target_error +
                    "': all occurrences already claimed");
                continue;
            }
            it->second = match->folded_pos + 1;
            result.spans.push_back(
                CharSpan{match->orig_start, match->orig_end, ann.severity});
        }
    }

    std::stable_sort(result.spans.begin(), result.spans.end(),
                     [](const CharSpan& a, const CharSpan& b) {
                         return a.start < b.start;
                     });
    return result;
}

}  // namespace mtqe
