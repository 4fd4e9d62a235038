#include "mtqe/prompting.hpp"

#include "mtqe/jsonl.hpp"
#include "test_helpers.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace mtqe;

namespace {

LanguagePair cs_de() { return {"Czech", "German", "cs-de"}; }
LanguagePair en_it() { return {"English", "Italian", "en-it"}; }

std::size_t count_occurrences(const std::string& haystack,
                              const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

}  // namespace

TEST_CASE("system prompt substitutes the language pair") {
    std::string text = build_system_prompt(cs_de());
    CHECK(text.rfind("You are an AI assistant specialized in Czech-to-German "
                     "translation quality assurance.",
                     0) == 0);
    CHECK(text.find("You will receive the Czech-German translation pair") !=
          std::string::npos);
    CHECK(text.find("{source_language}") == std::string::npos);
    CHECK(text.find("{target_language}") == std::string::npos);
}

TEST_CASE("few-shot examples are pair-independent") {
    std::string cs = build_system_prompt(cs_de());
    std::string it = build_system_prompt(en_it());
    for (const std::string& text : {cs, it}) {
        CHECK(count_occurrences(text, "Szanowny Kliencie") == 1);
        CHECK(text.find("for English-German translation") != std::string::npos);
        CHECK(text.find("for French-Italian translation") != std::string::npos);
        CHECK(text.find("\"target_error\": None") != std::string::npos);
    }
    CHECK(it.rfind("You are an AI assistant specialized in English-to-Italian ",
                   0) == 0);
    CHECK(cs != it);
}

TEST_CASE("system prompt is a pure function of the pair") {
    CHECK(build_system_prompt(cs_de()) == build_system_prompt(cs_de()));
}

TEST_CASE("system prompt matches the golden snapshot") {
    std::string golden = read_text_file(testing::fixture_dir() / "prompts" /
                                        "system_cs_de.golden.txt");
    CHECK(build_system_prompt(cs_de()) == golden);
}

TEST_CASE("user prompt is strict JSON that round-trips the fields") {
    Segment segment{"item1", "sysA", en_it(), "Hi", "Ciao"};
    std::string text = build_user_prompt(segment);
    auto parsed = nlohmann::json::parse(text);
    CHECK(parsed.at("source_language") == "English");
    CHECK(parsed.at("source") == "Hi");
    CHECK(parsed.at("translation_language") == "Italian");
    CHECK(parsed.at("translation") == "Ciao");
    CHECK(parsed.size() == 4);
}

TEST_CASE("user prompt escapes quotes and handles empty targets") {
    Segment quoted{"i", "s", en_it(), "say \"hi\"\nplease", "Ciao"};
    auto parsed = nlohmann::json::parse(build_user_prompt(quoted));
    CHECK(parsed.at("source") == "say \"hi\"\nplease");

    Segment empty_target{"i", "s", en_it(), "Hi", ""};
    auto parsed2 = nlohmann::json::parse(build_user_prompt(empty_target));
    CHECK(parsed2.at("translation") == "");
}

TEST_CASE("user prompt round-trips arbitrary text") {
    std::mt19937_64 rng(7);
    testing::RandomJsonGenerator gen(11);
    for (int i = 0; i < 200; ++i) {
        Segment segment{"i", "s", cs_de(), gen.text(), gen.text()};
        auto parsed = nlohmann::json::parse(build_user_prompt(segment));
        CHECK(parsed.at("source") == segment.source);
        CHECK(parsed.at("translation") == segment.target);
    }
}

TEST_CASE("user prompt matches the golden snapshot") {
    Segment segment{"cs1", "demo", cs_de(),
                    "Dobrý den, světe! Zítra bude \"krásně\".",
                    "Guten Tag, Welt! Morgen wird es „schön“."};
    std::string golden = read_text_file(testing::fixture_dir() / "prompts" /
                                        "user_cs_de.golden.txt");
    CHECK(build_user_prompt(segment) == golden);
}
