#pragma once

#include "mtqe/types.hpp"

#include <array>
#include <cstddef>
#include <string>

namespace mtqe {

// Accounting for one filtering run. after = before - rejected_hallucinated
// - rejected_duplicates always holds.
struct FilterReport {
    std::size_t errors_before = 0;
    std::size_t errors_after = 0;
    std::size_t rejected_hallucinated = 0;
    std::size_t rejected_duplicates = 0;
    // Indexed by Severity: {minor, major, critical}.
    std::array<std::size_t, 3> before_by_severity{};
    std::array<std::size_t, 3> after_by_severity{};

    void add(const FilterReport& other);
};

// Drops every annotation whose target_error, after case folding, does not
// occur in the folded target text. Source-only annotations (null
// target_error, e.g. omissions) survive.
QEJudgment filter_hallucinated(const QEJudgment& judgment,
                               const std::string& target);

// Collapses annotations whose normalized target_error texts are equal,
// keeping only the highest-severity instance (first in its list on a
// same-severity tie). Source-only annotations are never deduplicated.
QEJudgment dedupe_cross_severity(const QEJudgment& judgment);

struct FilterOptions {
    bool hallucination = true;
    bool dedupe = true;
};

// hallucination filter then cross-severity dedup, with per-stage counts.
QEJudgment apply_filters(const QEJudgment& judgment, const std::string& target,
                         const FilterOptions& options, FilterReport& report);

// 100 * (before - after) / before; 0.0 when nothing was there to reject.
double rejection_rate(const FilterReport& report);

// The number as it appears in reports: one decimal place.
std::string format_rate(double percent);

}  // namespace mtqe
