#include "mtqe/sha256.hpp"
#include "mtqe/unicode.hpp"

#include <doctest.h>

using namespace mtqe;

TEST_CASE("sha256 matches published vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // Forces the two-block padding path.
    CHECK(sha256_hex(std::string(56, 'a')) ==
          "b35439a4ac6f0948b6d6f9e3c6af0f5f590ce20f1bde7090ef7970686ec6738a");
}

TEST_CASE("utf8 round trip and invalid byte replacement") {
    std::string text = "Straße переклад \U0001F600";
    CHECK(encode_utf8(decode_utf8(text)) == text);
    CHECK(codepoint_count("abc") == 3);
    CHECK(codepoint_count("Straße") == 6);
    CHECK(codepoint_count("\U0001F600") == 1);

    std::string bad = "ok\xC3(";  // truncated two-byte sequence
    auto decoded = decode_utf8(bad);
    CHECK(decoded.size() == 4);
    CHECK(decoded[2] == 0xFFFD);
}

TEST_CASE("case folding handles full foldings") {
    CHECK(casefold_utf8("GUT") == "gut");
    CHECK(casefold_utf8("Straße") == "strasse");
    CHECK(casefold_utf8("ПЕРЕКЛАД") == "переклад");
    CHECK(casefold_utf8("İstanbul") != "istanbul");  // dotted capital I folds with combining dot
}

TEST_CASE("normalize_for_match collapses whitespace after folding") {
    CHECK(normalize_for_match("  Das\t ist\n GUT  ") == "das ist gut");
    CHECK(normalize_for_match("a b") == "a b");
    CHECK(normalize_for_match("   ") == "");
}

TEST_CASE("FoldedText finds boundary-aligned matches") {
    FoldedText text("Das ist STRASSE und Straße");
    auto m = text.find(casefold(decode_utf8("straße")), 0);
    REQUIRE(m.has_value());
    CHECK(m->orig_start == 8);
    CHECK(m->orig_end == 15);

    auto m2 = text.find(casefold(decode_utf8("straße")), m->folded_pos + 1);
    REQUIRE(m2.has_value());
    CHECK(m2->orig_start == 20);
    CHECK(m2->orig_end == 26);  // "Straße" is six characters

    SUBCASE("match ending inside a folded expansion is rejected") {
        FoldedText sharp("Straße");
        CHECK(!sharp.find(decode_utf8("stras"), 0).has_value());
        CHECK(sharp.find(decode_utf8("strass"), 0).has_value());
    }

    SUBCASE("matched original substring folds to the needle") {
        FoldedText sharp("Weißwein und mehr");
        auto hit = sharp.find(decode_utf8("weisswein"), 0);
        REQUIRE(hit.has_value());
        std::u32string original = sharp.original().substr(
            hit->orig_start, hit->orig_end - hit->orig_start);
        CHECK(casefold(original) == decode_utf8("weisswein"));
    }
}
