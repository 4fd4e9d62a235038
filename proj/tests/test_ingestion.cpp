#include "mtqe/ingestion.hpp"

#include "mtqe/error.hpp"
#include "mtqe/jsonl.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

using namespace mtqe;

namespace {

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& line : lines) out << line << "\n";
}

std::string segment_line(const std::string& item, const std::string& system,
                         const std::string& target = "Hallo") {
    nlohmann::ordered_json row{{"item_id", item},     {"system_id", system},
                               {"src_lang", "Czech"}, {"tgt_lang", "German"},
                               {"source", "Ahoj"},    {"target", target}};
    return row.dump();
}

}  // namespace

TEST_CASE("load_segments keeps file order") {
    testing::TempDir tmp("ingest_order");
    auto path = tmp.path() / "segments.jsonl";
    write_lines(path, {segment_line("i1", "a"), segment_line("i2", "a"),
                       segment_line("i1", "b")});
    auto segments = load_segments(path);
    REQUIRE(segments.size() == 3);
    CHECK(segments[0].item_id == "i1");
    CHECK(segments[0].system_id == "a");
    CHECK(segments[1].item_id == "i2");
    CHECK(segments[2].system_id == "b");
    CHECK(segments[0].pair.code == "cs-de");
}

TEST_CASE("load_segments rejects duplicates with the line number") {
    testing::TempDir tmp("ingest_dup");
    auto path = tmp.path() / "segments.jsonl";
    write_lines(path, {segment_line("i1", "a"), segment_line("i1", "a")});
    try {
        load_segments(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find(":2") != std::string::npos);
        CHECK(msg.find("duplicate") != std::string::npos);
    }
}

TEST_CASE("load_segments validates the schema") {
    testing::TempDir tmp("ingest_schema");
    auto path = tmp.path() / "segments.jsonl";

    SUBCASE("missing field") {
        write_lines(path, {R"({"item_id":"i","system_id":"s"})"});
        CHECK_THROWS_AS(load_segments(path), DataError);
    }
    SUBCASE("empty source") {
        nlohmann::json row{{"item_id", "i"},   {"system_id", "s"},
                           {"src_lang", "Czech"}, {"tgt_lang", "German"},
                           {"source", ""},     {"target", "x"}};
        write_lines(path, {row.dump()});
        CHECK_THROWS_AS(load_segments(path), DataError);
    }
    SUBCASE("same language on both sides") {
        nlohmann::json row{{"item_id", "i"},   {"system_id", "s"},
                           {"src_lang", "Czech"}, {"tgt_lang", "Czech"},
                           {"source", "x"},    {"target", "x"}};
        write_lines(path, {row.dump()});
        CHECK_THROWS_AS(load_segments(path), DataError);
    }
    SUBCASE("invalid JSON names the line") {
        write_lines(path, {segment_line("i", "s"), "not json"});
        try {
            load_segments(path);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(":2") != std::string::npos);
        }
    }
}

TEST_CASE("a full-size dataset loads completely") {
    testing::TempDir tmp("ingest_full");
    auto path = tmp.path() / "segments.jsonl";
    std::vector<std::string> lines;
    for (int system = 0; system < 20; ++system) {
        for (int item = 0; item < 231; ++item) {
            lines.push_back(segment_line("item" + std::to_string(item),
                                         "sys" + std::to_string(system)));
        }
    }
    write_lines(path, lines);
    CHECK(load_segments(path).size() == 20 * 231);
}

TEST_CASE("segments round-trip through serialization") {
    testing::TempDir tmp("ingest_roundtrip");
    auto path = tmp.path() / "segments.jsonl";
    write_lines(path, {segment_line("i1", "a", "Grüße \"zitat\""),
                       segment_line("i2", "b", "переклад")});
    auto segments = load_segments(path);
    auto original = read_jsonl(path);
    REQUIRE(original.size() == segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        // Equality of parsed values: byte layout and key order may differ.
        CHECK(nlohmann::json(segment_to_json(segments[i])) == original[i]);
    }
}

TEST_CASE("gold annotations round-trip through serialization") {
    testing::TempDir tmp("gold_roundtrip");
    auto path = tmp.path() / "gold.jsonl";
    nlohmann::ordered_json row{
        {"item_id", "i"},
        {"system_id", "s"},
        {"annotator_id", "a1"},
        {"score", 62.5},
        {"spans", nlohmann::json::array(
                      {{{"start", 3}, {"end", 9}, {"severity", "major"}},
                       {{"start", 0}, {"end", 2}, {"severity", "minor"}}})}};
    write_lines(path, {row.dump()});
    auto gold = load_gold(path);
    REQUIRE(gold.size() == 1);
    CHECK(nlohmann::json(gold_to_json(gold[0])) == nlohmann::json(row));
}

TEST_CASE("gold_score averages available annotators") {
    GoldAnnotation a{"i", "s", "ann1", 80.0, {}};
    GoldAnnotation b{"i", "s", "ann2", 90.0, {}};
    CHECK(gold_score({a, b}) == doctest::Approx(85.0));
    CHECK(gold_score({GoldAnnotation{"i", "s", "x", 70.0, {}}}) ==
          doctest::Approx(70.0));
    GoldAnnotation zero{"i", "s", "x", 0.0, {}};
    GoldAnnotation hundred{"i", "s", "y", 100.0, {}};
    CHECK(gold_score({zero, hundred}) == doctest::Approx(50.0));
    CHECK_THROWS_AS(gold_score({}), DataError);
}

TEST_CASE("gold_score is permutation invariant and bounded") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<GoldAnnotation> annotations;
        std::size_t n = 1 + rng() % 2;
        for (std::size_t i = 0; i < n; ++i) {
            annotations.push_back(
                {"i", "s", "a" + std::to_string(i),
                 static_cast<double>(rng() % 1001) / 10.0, {}});
        }
        double mean = gold_score(annotations);
        auto shuffled = annotations;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(gold_score(shuffled) == doctest::Approx(mean));
        double lo = annotations[0].score, hi = annotations[0].score;
        for (const auto& a : annotations) {
            lo = std::min(lo, a.score);
            hi = std::max(hi, a.score);
        }
        CHECK(mean >= lo - 1e-12);
        CHECK(mean <= hi + 1e-12);
    }
}

TEST_CASE("load_gold enforces the span and annotator rules") {
    testing::TempDir tmp("gold");
    auto path = tmp.path() / "gold.jsonl";
    auto gold_line = [](const std::string& annotator, double score,
                        const std::string& severity = "minor") {
        nlohmann::ordered_json row{
            {"item_id", "i"},
            {"system_id", "s"},
            {"annotator_id", annotator},
            {"score", score},
            {"spans", nlohmann::json::array(
                          {{{"start", 0}, {"end", 2}, {"severity", severity}}})}};
        return row.dump();
    };

    SUBCASE("valid two-annotator segment") {
        write_lines(path, {gold_line("a1", 80), gold_line("a2", 90, "major")});
        auto gold = load_gold(path);
        REQUIRE(gold.size() == 2);
        CHECK(gold[0].spans[0].severity == Severity::kMinor);
        CHECK(gold[1].spans[0].severity == Severity::kMajor);
    }
    SUBCASE("critical severity in gold is rejected loudly") {
        write_lines(path, {gold_line("a1", 80, "critical")});
        CHECK_THROWS_AS(load_gold(path), DataError);
    }
    SUBCASE("three annotators rejected") {
        write_lines(path, {gold_line("a1", 80), gold_line("a2", 85),
                           gold_line("a3", 90)});
        CHECK_THROWS_AS(load_gold(path), DataError);
    }
    SUBCASE("score outside range rejected") {
        write_lines(path, {gold_line("a1", 101)});
        CHECK_THROWS_AS(load_gold(path), DataError);
    }
    SUBCASE("inverted span rejected") {
        nlohmann::json row{{"item_id", "i"},
                           {"system_id", "s"},
                           {"annotator_id", "a"},
                           {"score", 50},
                           {"spans", nlohmann::json::array(
                                         {{{"start", 3}, {"end", 3},
                                           {"severity", "minor"}}})}};
        write_lines(path, {row.dump()});
        CHECK_THROWS_AS(load_gold(path), DataError);
    }
}
