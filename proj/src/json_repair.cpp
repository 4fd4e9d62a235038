#include "mtqe/json_repair.hpp"

#include "mtqe/unicode.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace mtqe {

namespace {

using nlohmann::ordered_json;

bool is_ws(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '$' || c == '-' || c == '.' || c == '+';
}

// Recursive-descent scanner over the raw bytes. Repairs are applied at the
// point of detection; there is no backtracking, so the same input always
// yields the same tree and the same warning list.
class RepairParser {
public:
    explicit RepairParser(std::string_view text) : s_(text) {}

    RepairResult run() {
        RepairResult result;
        skip_noise();
        if (at_end()) throw ParseError("empty input after extraction");
        result.value = parse_value(0);
        skip_noise();
        if (!at_end()) warn("ignored trailing content");
        if (closed_scopes_ > 0) {
            warn("closed " + std::to_string(closed_scopes_) + " open scopes");
        }
        result.warnings = std::move(warnings_);
        return result;
    }

private:
    static constexpr int kMaxDepth = 192;

    bool at_end() const { return pos_ >= s_.size(); }
    char peek() const { return s_[pos_]; }
    char take() { return s_[pos_++]; }

    void warn(std::string msg) { warnings_.push_back(std::move(msg)); }

    void skip_noise() {
        while (!at_end()) {
            char c = peek();
            if (is_ws(c)) {
                ++pos_;
            } else if (c == '/' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '/') {
                while (!at_end() && peek() != '\n') ++pos_;
                warn("skipped // comment");
            } else if (c == '/' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '*') {
                pos_ += 2;
                while (pos_ + 1 < s_.size() &&
                       !(s_[pos_] == '*' && s_[pos_ + 1] == '/')) {
                    ++pos_;
                }
                pos_ = std::min(pos_ + 2, s_.size());
                warn("skipped /* comment");
            } else if (c == '\xEF' && s_.substr(pos_).starts_with("\xEF\xBB\xBF")) {
                pos_ += 3;
                warn("skipped byte order mark");
            } else {
                break;
            }
        }
    }

    ordered_json parse_value(int depth) {
        if (depth > kMaxDepth) throw ParseError("nesting too deep");
        while (true) {
            skip_noise();
            if (at_end()) {
                warn("missing value at end of input");
                return nullptr;
            }
            char c = peek();
            switch (c) {
                case '{': return parse_object(depth);
                case '[': return parse_array(depth);
                case '"':
                case '\'': return parse_string();
                default: break;
            }
            if (c == '-' || c == '+' || c == '.' ||
                std::isdigit(static_cast<unsigned char>(c))) {
                return parse_number();
            }
            if (std::isalpha(static_cast<unsigned char>(c))) return parse_word();
            warn(std::string("skipped unexpected character '") + c + "'");
            ++pos_;
        }
    }

    ordered_json parse_string() {
        char quote = take();
        if (quote == '\'') warn("converted single-quoted string");
        std::string out;
        while (true) {
            if (at_end()) {
                warn("closed unterminated string");
                ++closed_scopes_;
                break;
            }
            char c = take();
            if (c == quote) break;
            if (c == '\\') {
                parse_escape(out);
                continue;
            }
            if (static_cast<unsigned char>(c) < 0x20) {
                warn("kept unescaped control character in string");
            }
            out.push_back(c);
        }
        // nlohmann refuses to serialize invalid UTF-8, so mend it here.
        std::string mended = encode_utf8(decode_utf8(out));
        if (mended != out) warn("replaced invalid UTF-8 in string");
        return mended;
    }

    void parse_escape(std::string& out) {
        if (at_end()) {
            warn("dropped dangling backslash");
            return;
        }
        char c = take();
        switch (c) {
            case '"': out.push_back('"'); return;
            case '\\': out.push_back('\\'); return;
            case '/': out.push_back('/'); return;
            case 'b': out.push_back('\b'); return;
            case 'f': out.push_back('\f'); return;
            case 'n': out.push_back('\n'); return;
            case 'r': out.push_back('\r'); return;
            case 't': out.push_back('\t'); return;
            case 'u': {
                auto first = parse_hex4();
                if (!first) {
                    warn("kept malformed \\u escape");
                    out += "u";
                    return;
                }
                char32_t cp = *first;
                if (cp >= 0xD800 && cp <= 0xDBFF) {
                    // Expect a low surrogate; otherwise substitute U+FFFD.
                    std::size_t mark = pos_;
                    if (pos_ + 1 < s_.size() && s_[pos_] == '\\' &&
                        s_[pos_ + 1] == 'u') {
                        pos_ += 2;
                        auto second = parse_hex4();
                        if (second && *second >= 0xDC00 && *second <= 0xDFFF) {
                            cp = 0x10000 + ((cp - 0xD800) << 10) +
                                 (*second - 0xDC00);
                        } else {
                            pos_ = mark;
                            warn("replaced lone surrogate escape");
                            cp = 0xFFFD;
                        }
                    } else {
                        warn("replaced lone surrogate escape");
                        cp = 0xFFFD;
                    }
                } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
                    warn("replaced lone surrogate escape");
                    cp = 0xFFFD;
                }
                append_utf8(out, cp);
                return;
            }
            default:
                warn(std::string("kept invalid escape \\") + c);
                out.push_back(c);
                return;
        }
    }

    std::optional<char32_t> parse_hex4() {
        if (pos_ + 4 > s_.size()) return std::nullopt;
        char32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            char c = s_[pos_ + i];
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else return std::nullopt;
            v = (v << 4) | static_cast<char32_t>(d);
        }
        pos_ += 4;
        return v;
    }

    ordered_json parse_number() {
        std::size_t start = pos_;
        if (peek() == '-' || peek() == '+') ++pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) ||
                             peek() == '.')) {
            ++pos_;
        }
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            ++pos_;
            if (!at_end() && (peek() == '+' || peek() == '-')) ++pos_;
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
                ++pos_;
            }
        }
        std::string token(s_.substr(start, pos_ - start));
        // Let the strict parser type the token; only normalize when it
        // refuses (leading '+', bare '.', leading zeros ...).
        if (auto parsed = try_strict(token)) return *parsed;

        std::string fixed = token;
        if (!fixed.empty() && fixed.front() == '+') fixed.erase(0, 1);
        if (!fixed.empty() && fixed.front() == '.') fixed.insert(0, "0");
        if (fixed.size() >= 2 && fixed[0] == '-' && fixed[1] == '.') {
            fixed.insert(1, "0");
        }
        if (!fixed.empty() && fixed.back() == '.') fixed.push_back('0');
        while (fixed.size() >= 2 && fixed[0] == '0' &&
               std::isdigit(static_cast<unsigned char>(fixed[1]))) {
            fixed.erase(0, 1);
        }
        if (auto parsed = try_strict(fixed)) {
            warn("normalized number '" + token + "'");
            return *parsed;
        }
        warn("kept unparseable number '" + token + "' as string");
        return token;
    }

    static std::optional<ordered_json> try_strict(const std::string& token) {
        ordered_json v = ordered_json::parse(token, nullptr, false);
        if (v.is_discarded()) return std::nullopt;
        return v;
    }

    ordered_json parse_word() {
        std::size_t start = pos_;
        while (!at_end() && is_word_char(peek())) ++pos_;
        std::string word(s_.substr(start, pos_ - start));
        if (word == "true" || word == "false") return word == "true";
        if (word == "null") return nullptr;
        if (word == "None" || word == "NULL" || word == "nil") {
            warn("converted literal " + word + " to null");
            return nullptr;
        }
        if (word == "True" || word == "False") {
            warn("converted literal " + word);
            return word == "True";
        }
        if (word == "NaN" || word == "Infinity") {
            warn("converted non-finite number " + word + " to null");
            return nullptr;
        }
        warn("quoted bare word '" + word + "'");
        return word;
    }

    ordered_json parse_object(int depth) {
        take();  // '{'
        ordered_json obj = ordered_json::object();
        bool after_comma = false;
        while (true) {
            skip_noise();
            if (at_end()) {
                ++closed_scopes_;
                return obj;
            }
            char c = peek();
            if (c == '}') {
                take();
                if (after_comma && !obj.empty()) warn("removed trailing comma");
                return obj;
            }
            if (c == ']') {
                take();
                warn("treated mismatched ']' as '}'");
                return obj;
            }
            if (c == ',') {
                take();
                if (after_comma || obj.empty()) warn("removed extra comma");
                after_comma = true;
                continue;
            }
            if (!obj.empty() && !after_comma) {
                warn("inserted missing comma in object");
            }
            after_comma = false;

            std::string key = parse_key(depth);
            skip_noise();
            ordered_json value;
            if (!at_end() && peek() == ':') {
                take();
                value = parse_value(depth + 1);
            } else if (!at_end() && peek() == '=') {
                take();
                warn("treated '=' as ':'");
                value = parse_value(depth + 1);
            } else {
                warn("missing value for key '" + key + "'");
                value = nullptr;
            }
            if (obj.contains(key)) warn("duplicate key '" + key + "'");
            obj[key] = std::move(value);
        }
    }

    std::string parse_key(int depth) {
        char c = peek();
        if (c == '"' || c == '\'') {
            ordered_json str = parse_string();
            return str.get<std::string>();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
            std::size_t start = pos_;
            while (!at_end() && is_word_char(peek())) ++pos_;
            std::string key(s_.substr(start, pos_ - start));
            warn("quoted bare key '" + key + "'");
            return key;
        }
        // Anything else: parse it as a value and use its text form.
        ordered_json v = parse_value(depth + 1);
        std::string key = v.is_string() ? v.get<std::string>() : v.dump();
        warn("coerced non-string key '" + key + "'");
        return key;
    }

    ordered_json parse_array(int depth) {
        take();  // '['
        ordered_json arr = ordered_json::array();
        bool after_comma = false;
        while (true) {
            skip_noise();
            if (at_end()) {
                ++closed_scopes_;
                return arr;
            }
            char c = peek();
            if (c == ']') {
                take();
                if (after_comma && !arr.empty()) warn("removed trailing comma");
                return arr;
            }
            if (c == '}') {
                take();
                warn("treated mismatched '}' as ']'");
                return arr;
            }
            if (c == ',') {
                take();
                if (after_comma || arr.empty()) warn("removed extra comma");
                after_comma = true;
                continue;
            }
            if (!arr.empty() && !after_comma) {
                warn("inserted missing comma in array");
            }
            after_comma = false;
            arr.push_back(parse_value(depth + 1));
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::vector<std::string> warnings_;
    int closed_scopes_ = 0;
};

// Scans for the '}' matching the object opened at `open`, honouring string
// literals. Returns npos when the object never closes.
std::size_t find_balanced_close(std::string_view text, std::size_t open) {
    int depth = 0;
    char quote = 0;
    bool escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        char c = text[i];
        if (quote != 0) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i;
        }
    }
    return std::string_view::npos;
}

}  // namespace

std::string extract_json_block(std::string_view raw) {
    // Markdown fence lines are pure noise; remove them wholesale so the
    // payload survives whether or not the model closed the fence.
    std::string text;
    text.reserve(raw.size());
    std::size_t line_start = 0;
    bool first_kept = true;
    while (line_start <= raw.size()) {
        std::size_t line_end = raw.find('\n', line_start);
        std::string_view line = raw.substr(
            line_start, line_end == std::string_view::npos
                            ? raw.size() - line_start
                            : line_end - line_start);
        std::size_t indent = line.find_first_not_of(" \t");
        bool fence = indent != std::string_view::npos &&
                     line.substr(indent).starts_with("```");
        if (!fence) {
            if (!first_kept) text.push_back('\n');
            text.append(line);
            first_kept = false;
        }
        if (line_end == std::string_view::npos) break;
        line_start = line_end + 1;
    }

    std::size_t open = text.find('{');
    if (open == std::string::npos) {
        throw ParseError("no JSON object found in model output");
    }
    std::size_t close = find_balanced_close(text, open);
    if (close == std::string::npos) return text.substr(open);
    return text.substr(open, close - open + 1);
}

RepairResult repair_and_parse(std::string_view text) {
    return RepairParser(text).run();
}

namespace {

std::optional<double> coerce_score(const ordered_json& v,
                                   std::vector<std::string>& warnings) {
    double score;
    if (v.is_number()) {
        score = v.get<double>();
    } else if (v.is_string()) {
        const std::string& s = v.get_ref<const std::string&>();
        char* end = nullptr;
        score = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0' || !std::isfinite(score)) {
            warnings.push_back("score string '" + s + "' is not numeric");
            return std::nullopt;
        }
        warnings.push_back("coerced score from string '" + s + "'");
    } else {
        warnings.push_back("score has unusable type " + std::string(v.type_name()));
        return std::nullopt;
    }
    if (!std::isfinite(score)) {
        warnings.push_back("score is not finite");
        return std::nullopt;
    }
    if (score < 0.0) {
        warnings.push_back("clamped score " + ordered_json(score).dump() + " to 0");
        return 0.0;
    }
    if (score > 100.0) {
        warnings.push_back("clamped score " + ordered_json(score).dump() + " to 100");
        return 100.0;
    }
    return score;
}

std::optional<std::string> coerce_text_field(
    const ordered_json& v, const std::string& field,
    std::vector<std::string>& warnings) {
    if (v.is_null()) return std::nullopt;
    if (v.is_string()) return v.get<std::string>();
    warnings.push_back("stringified non-string " + field);
    return v.dump();
}

std::optional<ErrorAnnotation> validate_annotation(
    const ordered_json& item, Severity severity, std::size_t index,
    std::vector<std::string>& warnings) {
    std::string where = std::string(severity_name(severity)) + "[" +
                        std::to_string(index) + "]";
    if (!item.is_object()) {
        warnings.push_back("dropped non-object annotation in " + where);
        return std::nullopt;
    }
    ErrorAnnotation ann;
    ann.severity = severity;
    for (const auto& [key, v] : item.items()) {
        if (key == "type") {
            if (auto t = coerce_text_field(v, where + ".type", warnings)) {
                ann.type_path = casefold_utf8(*t);
            }
        } else if (key == "source_error") {
            ann.source_error = coerce_text_field(v, where + ".source_error", warnings);
        } else if (key == "target_error") {
            ann.target_error = coerce_text_field(v, where + ".target_error", warnings);
        } else if (key == "correction") {
            ann.correction = coerce_text_field(v, where + ".correction", warnings);
        } else if (key == "short_desc") {
            ann.short_desc = coerce_text_field(v, where + ".short_desc", warnings);
        } else {
            // Includes any inline "severity": position in the containing
            // list is authoritative.
            warnings.push_back("dropped unknown annotation key '" + key +
                               "' in " + where);
        }
    }
    if (ann.type_path.empty()) {
        warnings.push_back("annotation missing type in " + where);
    }
    if (!ann.source_error && !ann.target_error) {
        warnings.push_back("dropped annotation without source_error or target_error in " +
                           where);
        return std::nullopt;
    }
    return ann;
}

}  // namespace

QEJudgment validate_judgment(const ordered_json& value) {
    if (!value.is_object()) {
        throw ValidationError("judgment is not a JSON object");
    }
    QEJudgment judgment;
    auto& warnings = judgment.parse_warnings;

    bool saw_errors_key = false;
    bool saw_post_edit = false;
    for (const auto& [key, v] : value.items()) {
        if (key == "score") {
            judgment.score = coerce_score(v, warnings);
        } else if (key == "post_edited_translation") {
            saw_post_edit = true;
            if (auto text = coerce_text_field(v, "post_edited_translation", warnings)) {
                judgment.post_edited_translation = *text;
            } else {
                warnings.push_back("post_edited_translation is null");
            }
        } else if (key == "errors") {
            if (!v.is_object()) {
                warnings.push_back("errors is not an object; ignored");
                continue;
            }
            saw_errors_key = true;
            for (const auto& [sev_key, list] : v.items()) {
                auto severity = severity_from_name(sev_key);
                if (!severity) {
                    warnings.push_back("dropped unknown severity list '" + sev_key + "'");
                    continue;
                }
                if (!list.is_array()) {
                    warnings.push_back("severity list '" + sev_key +
                                       "' is not an array; ignored");
                    continue;
                }
                for (std::size_t i = 0; i < list.size(); ++i) {
                    if (auto ann = validate_annotation(list[i], *severity, i, warnings)) {
                        judgment.list(*severity).push_back(std::move(*ann));
                    }
                }
            }
        } else {
            warnings.push_back("dropped unknown key '" + key + "'");
        }
    }

    if (!judgment.score && !saw_errors_key) {
        throw ValidationError("judgment has neither a usable score nor an errors object");
    }
    if (!saw_post_edit) warnings.push_back("missing post_edited_translation");
    return judgment;
}

QEJudgment judgment_from_raw(std::string_view raw) {
    std::string block = extract_json_block(raw);
    RepairResult repaired = repair_and_parse(block);
    QEJudgment judgment = validate_judgment(repaired.value);
    judgment.parse_warnings.insert(judgment.parse_warnings.begin(),
                                   repaired.warnings.begin(),
                                   repaired.warnings.end());
    return judgment;
}

}  // namespace mtqe
