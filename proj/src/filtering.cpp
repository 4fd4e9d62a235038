#include "mtqe/filtering.hpp"

#include "mtqe/unicode.hpp"

#include <cstdio>
#include <map>
#include <vector>

namespace mtqe {

void FilterReport::add(const FilterReport& other) {
    errors_before += other.errors_before;
    errors_after += other.errors_after;
    rejected_hallucinated += other.rejected_hallucinated;
    rejected_duplicates += other.rejected_duplicates;
    for (std::size_t i = 0; i < 3; ++i) {
        before_by_severity[i] += other.before_by_severity[i];
        after_by_severity[i] += other.after_by_severity[i];
    }
}

QEJudgment filter_hallucinated(const QEJudgment& judgment,
                               const std::string& target) {
    FoldedText folded_target(target);
    QEJudgment out = judgment;
    for (Severity severity : kSeveritiesBySalience) {
        std::vector<ErrorAnnotation> kept;
        kept.reserve(judgment.list(severity).size());
        for (const auto& ann : judgment.list(severity)) {
            if (!ann.target_error) {
                kept.push_back(ann);  // omission path: no span to verify
                continue;
            }
            std::u32string needle = casefold(decode_utf8(*ann.target_error));
            if (!needle.empty() && folded_target.contains(needle)) {
                kept.push_back(ann);
            }
        }
        out.list(severity) = std::move(kept);
    }
    return out;
}

QEJudgment dedupe_cross_severity(const QEJudgment& judgment) {
    // Key -> severity rank of the surviving instance. First pass finds the
    // winner per key; second pass keeps only winners, first instance each.
    std::map<std::string, int> best_rank;
    for (Severity severity : kSeveritiesBySalience) {
        for (const auto& ann : judgment.list(severity)) {
            if (!ann.target_error) continue;
            std::string key = normalize_for_match(*ann.target_error);
            auto [it, inserted] = best_rank.try_emplace(key, severity_rank(severity));
            if (!inserted && severity_rank(severity) > it->second) {
                it->second = severity_rank(severity);
            }
        }
    }
    QEJudgment out = judgment;
    std::map<std::string, bool> emitted;
    for (Severity severity : kSeveritiesBySalience) {
        std::vector<ErrorAnnotation> kept;
        kept.reserve(judgment.list(severity).size());
        for (const auto& ann : judgment.list(severity)) {
            if (!ann.target_error) {
                kept.push_back(ann);
                continue;
            }
            std::string key = normalize_for_match(*ann.target_error);
            if (best_rank.at(key) != severity_rank(severity)) continue;
            if (emitted[key]) continue;
            emitted[key] = true;
            kept.push_back(ann);
        }
        out.list(severity) = std::move(kept);
    }
    return out;
}

QEJudgment apply_filters(const QEJudgment& judgment, const std::string& target,
                         const FilterOptions& options, FilterReport& report) {
    report.errors_before += judgment.total_errors();
    for (Severity severity : kSeveritiesBySalience) {
        report.before_by_severity[static_cast<std::size_t>(severity)] +=
            judgment.list(severity).size();
    }

    QEJudgment current = judgment;
    if (options.hallucination) {
        QEJudgment next = filter_hallucinated(current, target);
        report.rejected_hallucinated += current.total_errors() - next.total_errors();
        current = std::move(next);
    }
    if (options.dedupe) {
        QEJudgment next = dedupe_cross_severity(current);
        report.rejected_duplicates += current.total_errors() - next.total_errors();
        current = std::move(next);
    }

    report.errors_after += current.total_errors();
    for (Severity severity : kSeveritiesBySalience) {
        report.after_by_severity[static_cast<std::size_t>(severity)] +=
            current.list(severity).size();
    }
    return current;
}

double rejection_rate(const FilterReport& report) {
    if (report.errors_before == 0) return 0.0;
    return 100.0 *
           static_cast<double>(report.errors_before - report.errors_after) /
           static_cast<double>(report.errors_before);
}

std::string format_rate(double percent) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", percent);
    return buf;
}

}  // namespace mtqe
