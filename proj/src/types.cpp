#include "mtqe/types.hpp"

#include "mtqe/unicode.hpp"

#include <unordered_map>

namespace mtqe {

std::string_view severity_name(Severity s) {
    switch (s) {
        case Severity::kMinor: return "minor";
        case Severity::kMajor: return "major";
        case Severity::kCritical: return "critical";
    }
    return "minor";
}

std::optional<Severity> severity_from_name(std::string_view name) {
    if (name == "minor") return Severity::kMinor;
    if (name == "major") return Severity::kMajor;
    if (name == "critical") return Severity::kCritical;
    return std::nullopt;
}

std::string language_pair_code(std::string_view source_lang,
                               std::string_view target_lang) {
    static const std::unordered_map<std::string, std::string> kTags = {
        {"czech", "cs"},     {"german", "de"},   {"english", "en"},
        {"italian", "it"},   {"ukrainian", "uk"}, {"polish", "pl"},
        {"spanish", "es"},   {"french", "fr"},   {"japanese", "ja"},
        {"chinese", "zh"},   {"russian", "ru"},  {"portuguese", "pt"},
        {"dutch", "nl"},     {"hindi", "hi"},    {"korean", "ko"},
        {"arabic", "ar"},    {"turkish", "tr"},  {"swedish", "sv"},
        {"danish", "da"},    {"finnish", "fi"},  {"norwegian", "no"},
        {"romanian", "ro"},  {"greek", "el"},    {"hungarian", "hu"},
        {"bulgarian", "bg"}, {"slovak", "sk"},   {"slovenian", "sl"},
        {"croatian", "hr"},  {"estonian", "et"}, {"latvian", "lv"},
        {"lithuanian", "lt"}, {"icelandic", "is"}, {"hebrew", "he"},
        {"vietnamese", "vi"}, {"thai", "th"},    {"indonesian", "id"},
        {"serbian", "sr"},   {"catalan", "ca"},
    };
    auto tag = [](std::string_view name) {
        std::string key = casefold_utf8(name);
        auto it = kTags.find(key);
        return it != kTags.end() ? it->second : key;
    };
    return tag(source_lang) + "-" + tag(target_lang);
}

const std::vector<ErrorAnnotation>& QEJudgment::list(Severity s) const {
    switch (s) {
        case Severity::kCritical: return critical;
        case Severity::kMajor: return major;
        case Severity::kMinor: return minor;
    }
    return minor;
}

std::vector<ErrorAnnotation>& QEJudgment::list(Severity s) {
    switch (s) {
        case Severity::kCritical: return critical;
        case Severity::kMajor: return major;
        case Severity::kMinor: return minor;
    }
    return minor;
}

}  // namespace mtqe
