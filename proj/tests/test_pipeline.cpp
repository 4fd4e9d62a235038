#include "mtqe/pipeline.hpp"

#include "mtqe/error.hpp"
#include "mtqe/mock_server.hpp"
#include "test_helpers.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace mtqe;
using nlohmann::json;

namespace {

Segment segment(const std::string& item, const std::string& system,
                const std::string& code, const std::string& target) {
    LanguagePair pair = code == "cs-de"
                            ? LanguagePair{"Czech", "German", "cs-de"}
                            : LanguagePair{"English", "Italian", "en-it"};
    return Segment{item, system, pair, "source text", target};
}

JudgmentRecord record(const std::string& item, const std::string& system,
                      double score) {
    JudgmentRecord r;
    r.item_id = item;
    r.system_id = system;
    r.model = "m";
    r.judgment.score = score;
    return r;
}

GoldAnnotation gold(const std::string& item, const std::string& system,
                    const std::string& annotator, double score) {
    return GoldAnnotation{item, system, annotator, score, {}};
}

}  // namespace

TEST_CASE("judgment records round-trip through JSON") {
    JudgmentRecord r = record("i1", "s1", 77.5);
    ErrorAnnotation ann;
    ann.type_path = "accuracy/omission";
    ann.source_error = "phrase";
    ann.severity = Severity::kMajor;
    r.judgment.major.push_back(ann);
    r.judgment.parse_warnings = {"w1", "w2"};
    r.judgment.post_edited_translation = "edited";

    auto row = judgment_record_to_json(r);
    JudgmentRecord back = judgment_record_from_json(json(row), "mem");
    CHECK(back.item_id == r.item_id);
    CHECK(back.judgment.score == r.judgment.score);
    CHECK(back.judgment.major == r.judgment.major);
    CHECK(back.judgment.parse_warnings == r.judgment.parse_warnings);
    CHECK(judgment_record_to_json(back).dump() == row.dump());

    SUBCASE("null score survives") {
        r.judgment.score.reset();
        auto null_row = judgment_record_to_json(r);
        CHECK(null_row["score"].is_null());
        CHECK(!judgment_record_from_json(json(null_row), "mem")
                   .judgment.score.has_value());
    }
}

TEST_CASE("evaluation covers multiple language pairs with an average") {
    std::vector<Segment> segments{
        segment("i1", "a", "cs-de", "Ziel eins"),
        segment("i1", "b", "cs-de", "Ziel zwei"),
        segment("j1", "a", "en-it", "testo uno"),
        segment("j1", "b", "en-it", "testo due"),
    };
    std::vector<GoldAnnotation> golds{
        gold("i1", "a", "x", 80), gold("i1", "a", "y", 90),
        gold("i1", "b", "x", 60), gold("i1", "b", "y", 70),
        gold("j1", "a", "x", 40), gold("j1", "a", "y", 50),
        gold("j1", "b", "x", 90), gold("j1", "b", "y", 95),
    };
    std::vector<JudgmentRecord> judgments{
        record("i1", "a", 88), record("i1", "b", 61),
        record("j1", "a", 45), record("j1", "b", 93),
    };
    EvalOptions options;
    options.seed = 5;
    auto outputs =
        run_evaluate_stage(segments, golds, &judgments, nullptr, nullptr, options);
    const auto& report = outputs.report;
    CHECK(report["language_pairs"].contains("cs-de"));
    CHECK(report["language_pairs"].contains("en-it"));
    CHECK(report["average"].contains("spa"));
    double spa_csde = report["language_pairs"]["cs-de"]["spa"].get<double>();
    double spa_enit = report["language_pairs"]["en-it"]["spa"].get<double>();
    CHECK(report["average"]["spa"].get<double>() ==
          doctest::Approx((spa_csde + spa_enit) / 2.0));
    // Ranking agrees in both pairs: metric-vs-human p-values coincide.
    CHECK(spa_csde == 1.0);
    CHECK(spa_enit == 1.0);
    CHECK(outputs.report_md.find("| average |") != std::string::npos);
    CHECK(outputs.scores_csv.find("cs-de,a,") != std::string::npos);
}

TEST_CASE("evaluation rejects coverage gaps, listing segments") {
    std::vector<Segment> segments{segment("i1", "a", "cs-de", "Ziel"),
                                  segment("i1", "b", "cs-de", "Ziel")};
    std::vector<GoldAnnotation> golds{gold("i1", "a", "x", 80),
                                      gold("i1", "b", "x", 70)};
    std::vector<JudgmentRecord> judgments{record("i1", "a", 88)};  // b missing
    EvalOptions options;
    CHECK_THROWS_WITH_AS(
        run_evaluate_stage(segments, golds, &judgments, nullptr, nullptr, options),
        doctest::Contains("i1/b"), DataError);

    SUBCASE("a null score is also a gap") {
        JudgmentRecord unusable;
        unusable.item_id = "i1";
        unusable.system_id = "b";
        judgments.push_back(unusable);
        CHECK_THROWS_WITH_AS(run_evaluate_stage(segments, golds, &judgments,
                                                nullptr, nullptr, options),
                             doctest::Contains("i1/b"), DataError);
    }

    SUBCASE("a filtered file missing a segment is a gap too") {
        judgments.push_back(record("i1", "b", 61));
        std::vector<JudgmentRecord> filtered{record("i1", "a", 88)};
        CHECK_THROWS_WITH_AS(run_evaluate_stage(segments, golds, &judgments,
                                                &filtered, nullptr, options),
                             doctest::Contains("i1/b"), DataError);
    }
}

TEST_CASE("gold spans beyond the target length are rejected") {
    std::vector<Segment> segments{segment("i1", "a", "cs-de", "kurz"),
                                  segment("i1", "b", "cs-de", "kurz")};
    GoldAnnotation bad = gold("i1", "a", "x", 80);
    bad.spans.push_back({0, 10, Severity::kMinor});  // target has 4 chars
    std::vector<GoldAnnotation> golds{bad, gold("i1", "b", "x", 70)};
    std::vector<JudgmentRecord> judgments{record("i1", "a", 88),
                                          record("i1", "b", 61)};
    EvalOptions options;
    CHECK_THROWS_WITH_AS(
        run_evaluate_stage(segments, golds, &judgments, nullptr, nullptr, options),
        doctest::Contains("out of bounds"), DataError);
}

TEST_CASE("severity map changes cross-severity credit") {
    // Predicted critical over gold major: full credit under the default
    // map, half credit when critical keeps its own label.
    std::vector<Segment> segments{segment("i1", "a", "cs-de", "Wort eins"),
                                  segment("i1", "b", "cs-de", "Wort zwei")};
    GoldAnnotation g1 = gold("i1", "a", "x", 50);
    g1.spans.push_back({0, 4, Severity::kMajor});
    std::vector<GoldAnnotation> golds{g1, gold("i1", "b", "x", 70)};

    JudgmentRecord a = record("i1", "a", 52);
    ErrorAnnotation ann;
    ann.type_path = "accuracy/mistranslation";
    ann.target_error = "Wort";
    ann.severity = Severity::kCritical;
    a.judgment.critical.push_back(ann);
    std::vector<JudgmentRecord> judgments{a, record("i1", "b", 71)};

    EvalOptions options;
    auto full = run_evaluate_stage(segments, golds, &judgments, nullptr,
                                   nullptr, options);
    options.severity_map.critical = Severity::kCritical;
    auto half = run_evaluate_stage(segments, golds, &judgments, nullptr,
                                   nullptr, options);
    double f1_full = full.report["language_pairs"]["cs-de"]["span"]["unfiltered"]
                         ["f1"].get<double>();
    double f1_half = half.report["language_pairs"]["cs-de"]["span"]["unfiltered"]
                         ["f1"].get<double>();
    CHECK(f1_full == doctest::Approx(1.0));
    CHECK(f1_half == doctest::Approx(0.5));
}

TEST_CASE("judge stage counts unusable model output as failure") {
    MockServer server({std::nullopt, std::string("no JSON here at all"), {}});
    int port = server.start(0);
    ClientConfig config;
    config.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    config.model_name = "m";
    config.backoff_initial_s = 0.001;
    LlmClient client(config);
    std::vector<Segment> segments{segment("i1", "a", "cs-de", "Ziel")};
    JudgeStageResult result = run_judge_stage(segments, client);
    CHECK(result.failed_segments == 1);
    CHECK(result.judgments.empty());
    CHECK(result.raw_rows.size() == 1);  // transport succeeded, parse did not
    CHECK(!result.raw_rows[0].contains("error"));
}

TEST_CASE("filter stage groups accounting by model and language pair") {
    std::vector<Segment> segments{segment("i1", "a", "cs-de", "Das Wort gut"),
                                  segment("j1", "a", "en-it", "parola buona")};
    JudgmentRecord cs = record("i1", "a", 50);
    ErrorAnnotation present;
    present.type_path = "x";
    present.target_error = "Wort";
    present.severity = Severity::kMinor;
    ErrorAnnotation ghost = present;
    ghost.target_error = "fehlt";
    cs.judgment.minor = {present, ghost};
    JudgmentRecord it = record("j1", "a", 60);
    ErrorAnnotation dup1 = present;
    dup1.target_error = "parola";
    ErrorAnnotation dup2 = dup1;
    dup2.severity = Severity::kMajor;
    it.judgment.minor = {dup1};
    it.judgment.major = {dup2};

    FilterStageResult result =
        run_filter_stage({cs, it}, segments, FilterOptions{});
    const auto& models = result.report["models"]["m"]["language_pairs"];
    CHECK(models["cs-de"]["before"] == 2);
    CHECK(models["cs-de"]["after"] == 1);
    CHECK(models["cs-de"]["rejected_hallucinated"] == 1);
    CHECK(models["en-it"]["before"] == 2);
    CHECK(models["en-it"]["after"] == 1);
    CHECK(models["en-it"]["rejected_duplicates"] == 1);
    CHECK(result.report["total"]["before"] == 4);
    CHECK(result.report["total"]["after"] == 2);
    CHECK(result.report["total"]["rejection_rate_percent"] == 50.0);
}
