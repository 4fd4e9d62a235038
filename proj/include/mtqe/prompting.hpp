#pragma once

#include "mtqe/types.hpp"

#include <string>

namespace mtqe {

struct PromptPair {
    std::string system_text;
    std::string user_text;  // strict JSON
};

// System prompt for the given language pair. The three embedded few-shot
// examples (en-de, pl-es, fr-it) are pair-independent and emitted verbatim;
// only the two language placeholders change.
std::string build_system_prompt(const LanguagePair& pair);

// User message: a JSON object carrying source_language, source,
// translation_language and translation, values JSON-escaped.
std::string build_user_prompt(const Segment& segment);

PromptPair build_prompts(const Segment& segment);

}  // namespace mtqe
