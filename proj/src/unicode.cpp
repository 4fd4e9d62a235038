#include "mtqe/unicode.hpp"

#include <algorithm>

namespace mtqe {

namespace {

struct CaseFoldEntry {
    std::uint32_t from;
    std::uint32_t to[3];
    std::uint8_t len;
};

#include "casefold_table.inc"

const CaseFoldEntry* lookup_fold(char32_t cp) {
    const auto* begin = kCaseFoldTable;
    const auto* end = kCaseFoldTable + kCaseFoldCount;
    const auto* it = std::lower_bound(
        begin, end, static_cast<std::uint32_t>(cp),
        [](const CaseFoldEntry& e, std::uint32_t v) { return e.from < v; });
    if (it != end && it->from == static_cast<std::uint32_t>(cp)) return it;
    return nullptr;
}

constexpr char32_t kReplacement = 0xFFFD;

}  // namespace

std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
    while (i < text.size()) {
        unsigned char b0 = bytes[i];
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        }
        int len;
        char32_t cp;
        if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        char32_t decoded = cp;
        for (int k = 1; k < len; ++k) {
            unsigned char b = bytes[i + k];
            if ((b & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            decoded = (decoded << 6) | (b & 0x3F);
        }
        // Reject overlong forms, surrogates and out-of-range values.
        if (ok) {
            if ((len == 2 && decoded < 0x80) || (len == 3 && decoded < 0x800) ||
                (len == 4 && decoded < 0x10000) ||
                (decoded >= 0xD800 && decoded <= 0xDFFF) || decoded > 0x10FFFF) {
                ok = false;
            }
        }
        if (ok) {
            out.push_back(decoded);
            i += len;
        } else {
            out.push_back(kReplacement);
            ++i;
        }
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) append_utf8(out, cp);
    return out;
}

std::size_t codepoint_count(std::string_view text) {
    return decode_utf8(text).size();
}

std::u32string casefold(std::u32string_view text) {
    std::u32string out;
    out.reserve(text.size());
    for (char32_t cp : text) {
        if (const auto* e = lookup_fold(cp)) {
            for (int k = 0; k < e->len; ++k) out.push_back(e->to[k]);
        } else {
            out.push_back(cp);
        }
    }
    return out;
}

std::string casefold_utf8(std::string_view text) {
    return encode_utf8(casefold(decode_utf8(text)));
}

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09:
        case 0x0A:
        case 0x0B:
        case 0x0C:
        case 0x0D:
        case 0x20:
        case 0x85:
        case 0xA0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

std::string normalize_for_match(std::string_view text) {
    std::u32string folded = casefold(decode_utf8(text));
    std::u32string out;
    out.reserve(folded.size());
    bool pending_space = false;
    for (char32_t cp : folded) {
        if (is_unicode_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return encode_utf8(out);
}

FoldedText::FoldedText(std::string_view utf8_text)
    : original_(decode_utf8(utf8_text)) {
    folded_.reserve(original_.size());
    origin_.reserve(original_.size());
    for (std::size_t i = 0; i < original_.size(); ++i) {
        char32_t cp = original_[i];
        if (const auto* e = lookup_fold(cp)) {
            for (int k = 0; k < e->len; ++k) {
                folded_.push_back(e->to[k]);
                origin_.push_back(static_cast<std::uint32_t>(i));
                is_first_unit_.push_back(k == 0);
            }
        } else {
            folded_.push_back(cp);
            origin_.push_back(static_cast<std::uint32_t>(i));
            is_first_unit_.push_back(true);
        }
    }
}

std::optional<FoldedText::Match> FoldedText::find(
    std::u32string_view folded_needle, std::size_t from) const {
    if (folded_needle.empty()) return std::nullopt;
    std::size_t pos = from;
    while (pos + folded_needle.size() <= folded_.size()) {
        std::size_t hit =
            folded_.find(folded_needle.data(), pos, folded_needle.size());
        if (hit == std::u32string::npos) return std::nullopt;
        std::size_t last = hit + folded_needle.size() - 1;
        // A match must start on the first folded unit of an original
        // character and end on the last one, otherwise the original span
        // would fold to more text than the needle.
        bool starts_aligned = is_first_unit_[hit];
        bool ends_aligned = last + 1 == folded_.size() ||
                            origin_[last + 1] != origin_[last];
        if (starts_aligned && ends_aligned) {
            return Match{hit, origin_[hit],
                         static_cast<std::size_t>(origin_[last]) + 1};
        }
        pos = hit + 1;
    }
    return std::nullopt;
}

bool FoldedText::contains(std::u32string_view folded_needle) const {
    return find(folded_needle, 0).has_value();
}

}  // namespace mtqe
