#pragma once

#include "mtqe/types.hpp"

#include <string>
#include <vector>

namespace mtqe {

struct SpanAlignment {
    std::vector<CharSpan> spans;            // sorted by start
    std::vector<std::string> warnings;      // surplus annotations that could
                                            // not be placed
};

// Maps each annotation with a non-null target_error to the leftmost
// case-folded occurrence in the target not already claimed by an earlier
// annotation of the same phrase (one occurrence cursor per normalized
// phrase; claims are start positions). Annotations are visited critical,
// major, minor, in list order. Source-only annotations contribute nothing.
//
// The judgment must already be hallucination-filtered; a phrase with no
// occurrence at all is a contract violation and raises. A phrase annotated
// more times than it occurs only exhausts its occurrences, which is a
// warning, not an error.
SpanAlignment locate_spans(const QEJudgment& judgment,
                           const std::string& target);

}  // namespace mtqe
