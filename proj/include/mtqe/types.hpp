#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtqe {

enum class Severity { kMinor, kMajor, kCritical };

// Higher value wins when collapsing duplicates.
inline int severity_rank(Severity s) { return static_cast<int>(s); }

std::string_view severity_name(Severity s);
std::optional<Severity> severity_from_name(std::string_view name);

struct LanguagePair {
    std::string source_lang;  // human-readable, e.g. "Czech"
    std::string target_lang;  // e.g. "German"
    std::string code;         // short tag, e.g. "cs-de"
};

// Best-effort "cs-de" style tag from human-readable names; unknown names
// fall back to their lowercased form.
std::string language_pair_code(std::string_view source_lang,
                               std::string_view target_lang);

struct Segment {
    std::string item_id;
    std::string system_id;
    LanguagePair pair;
    std::string source;
    std::string target;
};

// Character-index range in the target text, end exclusive. Indices count
// Unicode scalar values.
struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    Severity severity = Severity::kMinor;

    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct GoldAnnotation {
    std::string item_id;
    std::string system_id;
    std::string annotator_id;
    double score = 0.0;  // in [0, 100]
    std::vector<CharSpan> spans;
};

struct ErrorAnnotation {
    std::string type_path;  // e.g. "accuracy/mistranslation", lowercased
    std::optional<std::string> source_error;
    std::optional<std::string> target_error;
    std::optional<std::string> correction;
    std::optional<std::string> short_desc;
    Severity severity = Severity::kMinor;

    friend bool operator==(const ErrorAnnotation&, const ErrorAnnotation&) = default;
};

// One validated model judgment for a segment. Severity lists own their
// annotations; an annotation's severity field always matches its list.
struct QEJudgment {
    // Absent when the model returned errors but no usable score; such rows
    // serialize score as null and are reported as coverage gaps downstream.
    std::optional<double> score;
    std::string post_edited_translation;
    std::vector<ErrorAnnotation> critical;
    std::vector<ErrorAnnotation> major;
    std::vector<ErrorAnnotation> minor;
    std::vector<std::string> parse_warnings;

    const std::vector<ErrorAnnotation>& list(Severity s) const;
    std::vector<ErrorAnnotation>& list(Severity s);
    std::size_t total_errors() const {
        return critical.size() + major.size() + minor.size();
    }
};

inline constexpr std::array<Severity, 3> kSeveritiesBySalience = {
    Severity::kCritical, Severity::kMajor, Severity::kMinor};

}  // namespace mtqe
