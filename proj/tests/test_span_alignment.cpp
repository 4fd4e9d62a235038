#include "mtqe/span_alignment.hpp"

#include "mtqe/error.hpp"
#include "mtqe/filtering.hpp"
#include "mtqe/unicode.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace mtqe;

namespace {

QEJudgment with_targets(const std::vector<std::pair<std::string, Severity>>& phrases) {
    QEJudgment j;
    for (const auto& [phrase, severity] : phrases) {
        ErrorAnnotation ann;
        ann.type_path = "accuracy/mistranslation";
        ann.target_error = phrase;
        ann.severity = severity;
        j.list(severity).push_back(ann);
    }
    return j;
}

// Independent oracle: all boundary-aligned folded occurrence start
// positions of the phrase, in original character coordinates.
std::vector<std::pair<std::size_t, std::size_t>> enumerate_occurrences(
    const std::string& target, const std::string& phrase) {
    FoldedText folded(target);
    std::u32string needle = casefold(decode_utf8(phrase));
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    std::size_t from = 0;
    while (auto m = folded.find(needle, from)) {
        hits.emplace_back(m->orig_start, m->orig_end);
        from = m->folded_pos + 1;
    }
    return hits;
}

}  // namespace

TEST_CASE("single annotation takes the leftmost occurrence") {
    auto aligned = locate_spans(with_targets({{"aa", Severity::kMinor}}), "aa bb aa");
    REQUIRE(aligned.spans.size() == 1);
    CHECK(aligned.spans[0] == CharSpan{0, 2, Severity::kMinor});
}

TEST_CASE("repeated annotations advance the occurrence cursor") {
    auto aligned = locate_spans(
        with_targets({{"aa", Severity::kMinor}, {"aa", Severity::kMinor}}),
        "aa bb aa");
    REQUIRE(aligned.spans.size() == 2);
    CHECK(aligned.spans[0] == CharSpan{0, 2, Severity::kMinor});
    CHECK(aligned.spans[1] == CharSpan{6, 8, Severity::kMinor});
}

TEST_CASE("omission annotations contribute no span") {
    QEJudgment j;
    ErrorAnnotation omission;
    omission.type_path = "accuracy/omission";
    omission.source_error = "missing phrase";
    omission.severity = Severity::kMajor;
    j.major.push_back(omission);
    auto aligned = locate_spans(j, "anything");
    CHECK(aligned.spans.empty());
    CHECK(aligned.warnings.empty());
}

TEST_CASE("surplus annotations are dropped with a warning") {
    auto aligned = locate_spans(
        with_targets({{"aa", Severity::kMinor},
                      {"aa", Severity::kMinor},
                      {"aa", Severity::kMinor}}),
        "aa bb aa");
    CHECK(aligned.spans.size() == 2);
    REQUIRE(aligned.warnings.size() == 1);
    CHECK(aligned.warnings[0].find("surplus") != std::string::npos);
}

TEST_CASE("a phrase that never occurs violates the filter contract") {
    CHECK_THROWS_AS(
        locate_spans(with_targets({{"zz", Severity::kMinor}}), "aa bb"),
        Error);
}

TEST_CASE("folded matching maps spans onto original characters") {
    auto aligned =
        locate_spans(with_targets({{"STRASSE", Severity::kMajor}}), "Die Straße hier");
    REQUIRE(aligned.spans.size() == 1);
    CHECK(aligned.spans[0] == CharSpan{4, 10, Severity::kMajor});
}

TEST_CASE("span substrings fold back to the annotated phrase") {
    std::mt19937_64 rng(515);
    for (int trial = 0; trial < 300; ++trial) {
        auto test_case = testing::random_judgment(rng);
        QEJudgment filtered = filter_hallucinated(test_case.judgment, test_case.target);
        auto aligned = locate_spans(filtered, test_case.target);

        std::u32string target32 = decode_utf8(test_case.target);
        std::size_t n_spans_expected = 0;

        // Oracle: per normalized phrase, the k-th annotation claims the
        // k-th enumerated occurrence; later ones are dropped.
        std::map<std::u32string, std::size_t> claimed;
        std::vector<CharSpan> oracle_spans;
        for (Severity severity : kSeveritiesBySalience) {
            for (const auto& ann : filtered.list(severity)) {
                if (!ann.target_error) continue;
                auto occurrences =
                    enumerate_occurrences(test_case.target, *ann.target_error);
                std::u32string key = casefold(decode_utf8(*ann.target_error));
                std::size_t k = claimed[key]++;
                if (k < occurrences.size()) {
                    ++n_spans_expected;
                    oracle_spans.push_back(CharSpan{occurrences[k].first,
                                                    occurrences[k].second,
                                                    severity});
                }
            }
        }
        CHECK(aligned.spans.size() == n_spans_expected);
        std::stable_sort(oracle_spans.begin(), oracle_spans.end(),
                         [](const CharSpan& a, const CharSpan& b) {
                             return a.start < b.start;
                         });
        CHECK(aligned.spans == oracle_spans);

        for (const auto& span : aligned.spans) {
            CHECK(span.end <= target32.size());
            CHECK(span.start < span.end);
        }
        CHECK(std::is_sorted(aligned.spans.begin(), aligned.spans.end(),
                             [](const CharSpan& a, const CharSpan& b) {
                                 return a.start < b.start;
                             }));
    }
}

TEST_CASE("permuting annotations of distinct phrases is inconsequential") {
    std::string target = "eins zwei drei vier fünf";
    QEJudgment forward = with_targets({{"eins", Severity::kMinor},
                                       {"drei", Severity::kMajor},
                                       {"fünf", Severity::kCritical}});
    QEJudgment backward = with_targets({{"fünf", Severity::kCritical},
                                        {"drei", Severity::kMajor},
                                        {"eins", Severity::kMinor}});
    CHECK(locate_spans(forward, target).spans ==
          locate_spans(backward, target).spans);
}
