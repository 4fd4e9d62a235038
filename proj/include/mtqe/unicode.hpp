#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Unicode helpers shared by the filters, span alignment and prompt code.
// All character indices in this project count Unicode scalar values, never
// bytes. Case-insensitive matching uses Unicode full case folding, so e.g.
// "STRASSE" matches "Straße" and Cyrillic upper/lower pairs compare equal.

namespace mtqe {

// Decodes UTF-8 into scalar values. Invalid sequences become U+FFFD; one
// replacement per rejected byte so indices stay monotone.
std::u32string decode_utf8(std::string_view text);

std::string encode_utf8(std::u32string_view text);

// Appends the UTF-8 encoding of one scalar value.
void append_utf8(std::string& out, char32_t cp);

std::size_t codepoint_count(std::string_view text);

// Full case folding (1:N, e.g. U+00DF -> "ss").
std::u32string casefold(std::u32string_view text);
std::string casefold_utf8(std::string_view text);

bool is_unicode_space(char32_t cp);

// Casefolds and collapses whitespace runs to single U+0020, trimming the
// ends. This is the key used for duplicate-error detection.
std::string normalize_for_match(std::string_view text);

// A target text with its folded form and the mapping back to original
// character indices. Built once per segment, queried once per annotation.
class FoldedText {
public:
    explicit FoldedText(std::string_view utf8_text);

    // Leftmost occurrence of the folded needle at or after `from` (a folded
    // index), aligned to original character boundaries on both ends so that
    // the matched original substring folds to exactly the needle. Returns
    // {folded_pos, orig_start, orig_end} or nullopt.
    struct Match {
        std::size_t folded_pos;
        std::size_t orig_start;
        std::size_t orig_end;  // exclusive, in original characters
    };
    std::optional<Match> find(std::u32string_view folded_needle,
                              std::size_t from) const;

    bool contains(std::u32string_view folded_needle) const;

    const std::u32string& original() const { return original_; }
    const std::u32string& folded() const { return folded_; }
    std::size_t size() const { return original_.size(); }

private:
    std::u32string original_;
    std::u32string folded_;
    // For each folded position: index of the original character it came
    // from, and whether it is the first folded unit of that character.
    std::vector<std::uint32_t> origin_;
    std::vector<bool> is_first_unit_;
};

}  // namespace mtqe
