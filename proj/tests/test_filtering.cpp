#include "mtqe/filtering.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <random>

using namespace mtqe;

namespace {

ErrorAnnotation annotation(std::optional<std::string> target_error,
                           Severity severity,
                           std::optional<std::string> source_error = std::nullopt) {
    ErrorAnnotation ann;
    ann.type_path = "accuracy/mistranslation";
    ann.target_error = std::move(target_error);
    ann.source_error = std::move(source_error);
    ann.severity = severity;
    return ann;
}

std::vector<ErrorAnnotation> all_annotations(const QEJudgment& j) {
    std::vector<ErrorAnnotation> out;
    for (Severity s : kSeveritiesBySalience) {
        for (const auto& a : j.list(s)) out.push_back(a);
    }
    return out;
}

}  // namespace

TEST_CASE("hallucinated target phrases are removed") {
    QEJudgment j;
    j.score = 50;
    j.minor.push_back(annotation("schlecht", Severity::kMinor));
    QEJudgment out = filter_hallucinated(j, "Das ist gut");
    CHECK(out.minor.empty());
}

TEST_CASE("matching is case-insensitive via folding") {
    QEJudgment j;
    j.minor.push_back(annotation("GUT", Severity::kMinor));
    j.major.push_back(annotation("STRASSE", Severity::kMajor));
    QEJudgment out = filter_hallucinated(j, "Die Straße ist gut");
    CHECK(out.minor.size() == 1);
    CHECK(out.major.size() == 1);
}

TEST_CASE("source-only annotations survive the hallucination filter") {
    QEJudgment j;
    j.major.push_back(annotation(std::nullopt, Severity::kMajor,
                                 "the account holder"));
    QEJudgment out = filter_hallucinated(j, "Das ist gut");
    CHECK(out.major.size() == 1);
}

TEST_CASE("cross-severity duplicates keep the highest severity") {
    QEJudgment j;
    j.minor.push_back(annotation("dir", Severity::kMinor));
    j.major.push_back(annotation("dir", Severity::kMajor));
    QEJudgment out = dedupe_cross_severity(j);
    CHECK(out.major.size() == 1);
    CHECK(out.minor.empty());
}

TEST_CASE("same-severity duplicates collapse to one") {
    QEJudgment j;
    j.minor.push_back(annotation("dir", Severity::kMinor));
    j.minor.push_back(annotation("dir", Severity::kMinor));
    QEJudgment out = dedupe_cross_severity(j);
    CHECK(out.minor.size() == 1);
}

TEST_CASE("distinct phrases are not duplicates") {
    QEJudgment j;
    j.minor.push_back(annotation("dir", Severity::kMinor));
    j.minor.push_back(annotation("wäre", Severity::kMinor));
    QEJudgment out = dedupe_cross_severity(j);
    CHECK(out.minor.size() == 2);
}

TEST_CASE("dedup normalizes case and whitespace") {
    QEJudgment j;
    j.minor.push_back(annotation("Das  Haus", Severity::kMinor));
    j.major.push_back(annotation("das haus", Severity::kMajor));
    QEJudgment out = dedupe_cross_severity(j);
    CHECK(out.major.size() == 1);
    CHECK(out.minor.empty());
}

TEST_CASE("source-only annotations never dedupe against each other") {
    QEJudgment j;
    j.minor.push_back(annotation(std::nullopt, Severity::kMinor, "same phrase"));
    j.major.push_back(annotation(std::nullopt, Severity::kMajor, "same phrase"));
    QEJudgment out = dedupe_cross_severity(j);
    CHECK(out.minor.size() + out.major.size() == 2);
}

TEST_CASE("rejection rate reproduces the reference table rows") {
    auto rate = [](std::size_t before, std::size_t after) {
        FilterReport r;
        r.errors_before = before;
        r.errors_after = after;
        return format_rate(rejection_rate(r));
    };
    CHECK(rate(20278, 13591) == "33.0");
    CHECK(rate(16247, 15134) == "6.9");
    CHECK(rate(100, 100) == "0.0");
    FilterReport empty;
    CHECK(rejection_rate(empty) == 0.0);
}

TEST_CASE("filters are idempotent and order-invariant on random judgments") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 300; ++trial) {
        auto test_case = testing::random_judgment(rng);
        const auto& j = test_case.judgment;
        const auto& target = test_case.target;

        QEJudgment h = filter_hallucinated(j, target);
        CHECK(all_annotations(filter_hallucinated(h, target)) == all_annotations(h));
        QEJudgment d = dedupe_cross_severity(j);
        CHECK(all_annotations(dedupe_cross_severity(d)) == all_annotations(d));

        QEJudgment hd = dedupe_cross_severity(h);
        QEJudgment dh = filter_hallucinated(d, target);
        CHECK(all_annotations(hd) == all_annotations(dh));

        // Never grows, and the output is a subset of the input.
        CHECK(hd.total_errors() <= j.total_errors());
        auto input_all = all_annotations(j);
        for (const auto& ann : all_annotations(hd)) {
            CHECK(std::find(input_all.begin(), input_all.end(), ann) !=
                  input_all.end());
        }
    }
}

TEST_CASE("apply_filters accounts for every rejection") {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 200; ++trial) {
        auto test_case = testing::random_judgment(rng);
        FilterReport report;
        QEJudgment out = apply_filters(test_case.judgment, test_case.target,
                                       FilterOptions{}, report);
        CHECK(report.errors_before == test_case.judgment.total_errors());
        CHECK(report.errors_after == out.total_errors());
        CHECK(report.errors_after == report.errors_before -
                                         report.rejected_hallucinated -
                                         report.rejected_duplicates);
        std::size_t before_sum = 0, after_sum = 0;
        for (std::size_t i = 0; i < 3; ++i) {
            before_sum += report.before_by_severity[i];
            after_sum += report.after_by_severity[i];
        }
        CHECK(before_sum == report.errors_before);
        CHECK(after_sum == report.errors_after);
    }
}
