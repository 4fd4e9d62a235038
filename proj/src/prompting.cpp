#include "mtqe/prompting.hpp"

#include <json.hpp>

#include <string_view>

namespace mtqe {

namespace {

#include "prompt_templates.inc"

// Replaces every occurrence of one exact placeholder token. Literal braces
// elsewhere in the template (the few-shot JSON examples) are left alone;
// only the named tokens are substitution sites.
void substitute(std::string& text, std::string_view token,
                std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
}

std::string json_quote(const std::string& value) {
    return nlohmann::json(value).dump();
}

}  // namespace

std::string build_system_prompt(const LanguagePair& pair) {
    std::string text = kSystemPromptTemplate;
    substitute(text, "{source_language}", pair.source_lang);
    substitute(text, "{target_language}", pair.target_lang);
    return text;
}

std::string build_user_prompt(const Segment& segment) {
    std::string text = kUserPromptTemplate;
    substitute(text, "{source_language}", json_quote(segment.pair.source_lang));
    substitute(text, "{source_text}", json_quote(segment.source));
    substitute(text, "{target_language}", json_quote(segment.pair.target_lang));
    substitute(text, "{target_text}", json_quote(segment.target));
    return text;
}

PromptPair build_prompts(const Segment& segment) {
    return PromptPair{build_system_prompt(segment.pair),
                      build_user_prompt(segment)};
}

}  // namespace mtqe
