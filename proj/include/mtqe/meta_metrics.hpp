#pragma once

#include "mtqe/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mtqe {

// Dense systems x items grid of segment scores. NaN marks a missing value;
// the metric entry points require complete grids and report the gaps.
struct ScoreMatrix {
    std::vector<std::string> systems;
    std::vector<std::string> items;
    std::vector<double> values;  // row-major: [system][item]

    static ScoreMatrix empty(std::vector<std::string> systems,
                             std::vector<std::string> items);

    double at(std::size_t system, std::size_t item) const {
        return values[system * items.size() + item];
    }
    void set(std::size_t system, std::size_t item, double v) {
        values[system * items.size() + item] = v;
    }

    // "system_id/item_id" for every missing cell.
    std::vector<std::string> missing_cells() const;
};

// Builds a sorted, dense matrix from per-(item, system) scores.
ScoreMatrix build_score_matrix(
    const std::map<std::pair<std::string, std::string>, double>& by_item_system);

// Per-system arithmetic mean over items. Throws on missing values.
std::map<std::string, double> system_scores(const ScoreMatrix& matrix);

// One-sided p-value for mean(diffs) > 0 under the sign-flipping null.
// Exact: proportion of all 2^n sign patterns whose mean is >= the observed
// mean (the identity pattern always counts, so p is in (0, 1]).
double permutation_pvalue_exact(const std::vector<double>& diffs);

// Monte Carlo estimate with add-one smoothing:
// (1 + #{resampled mean >= observed}) / (resamples + 1).
double permutation_pvalue_sampled(const std::vector<double>& diffs,
                                  int resamples, std::uint64_t seed);

// Dispatches to the exact form when n <= 12, else to sampling.
double paired_permutation_pvalue(const std::vector<double>& a,
                                 const std::vector<double>& b, int resamples,
                                 std::uint64_t seed);

inline constexpr int kExactEnumerationLimit = 12;
inline constexpr int kDefaultResamples = 1000;

// Soft Pairwise Accuracy: mean over unordered system pairs of
// 1 - |p_metric - p_human|, both p-values computed on item-aligned score
// differences with the same orientation and the same per-pair seed. The
// per-pair seed is derived from the global seed and the two system ids, so
// results do not depend on system order or on whether pairs were evaluated
// in parallel.
double soft_pairwise_accuracy(const ScoreMatrix& metric,
                              const ScoreMatrix& human,
                              int resamples, std::uint64_t seed);

struct TieCalibration {
    double accuracy = 0.0;
    double epsilon = 0.0;
    std::size_t pairs = 0;
};

// Group-by-item pairwise ranking accuracy with a calibrated metric-tie
// threshold. Candidate pairs are all unordered system pairs within the
// same item; the human relation uses exact equality for ties; the metric
// calls a tie when |m_i - m_j| <= epsilon. epsilon is chosen from
// {0} + all observed |metric differences| to maximize accuracy, smaller
// epsilon winning ties.
TieCalibration tie_calibrated_accuracy(const ScoreMatrix& metric,
                                       const ScoreMatrix& human);

// Maps predicted severities onto the gold severity alphabet before the
// equal-severity check. ESA gold has only minor/major, so predicted
// critical collapses to major by default.
struct SeverityMap {
    Severity critical = Severity::kMajor;
    Severity major = Severity::kMajor;
    Severity minor = Severity::kMinor;

    Severity map(Severity s) const {
        switch (s) {
            case Severity::kCritical: return critical;
            case Severity::kMajor: return major;
            case Severity::kMinor: return minor;
        }
        return minor;
    }
};

struct SpanCounts {
    double matched_weight = 0.0;
    double predicted_chars = 0.0;
    double gold_chars = 0.0;

    void add(const SpanCounts& other) {
        matched_weight += other.matched_weight;
        predicted_chars += other.predicted_chars;
        gold_chars += other.gold_chars;
    }
};

struct SpanMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    SpanCounts counts;
};

// Character-level overlap for one segment. Each side reduces to one
// severity per character (the maximum across overlapping spans); a
// character annotated on both sides scores 1.0 when the mapped severities
// agree and 0.5 otherwise. target_length, when given, bounds-checks spans.
SpanCounts span_overlap(const std::vector<CharSpan>& predicted,
                        const std::vector<CharSpan>& gold,
                        const SeverityMap& severity_map,
                        std::optional<std::size_t> target_length = std::nullopt);

// Micro-aggregation: precision/recall/F1 from summed counts.
SpanMetrics span_metrics_from_counts(const SpanCounts& counts);

// Convenience for a single segment pair.
SpanMetrics span_f1(const std::vector<CharSpan>& predicted,
                    const std::vector<CharSpan>& gold,
                    const SeverityMap& severity_map,
                    std::optional<std::size_t> target_length = std::nullopt);

struct IaaResult {
    double spa = 0.0;
    TieCalibration segment_accuracy;
    std::size_t systems = 0;
    std::size_t items = 0;
};

// Scores annotator 2 against annotator 1 with the same two protocols,
// treating the second annotator (by sorted annotator_id per segment) as
// the metric. Every segment must carry exactly two annotations.
IaaResult inter_annotator_agreement(const std::vector<GoldAnnotation>& gold,
                                    int resamples, std::uint64_t seed);

}  // namespace mtqe
