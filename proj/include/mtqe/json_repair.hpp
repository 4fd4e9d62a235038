#pragma once

#include "mtqe/error.hpp"
#include "mtqe/types.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace mtqe {

// Model output that fails validation beyond repair (neither a score nor an
// errors object survived).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Cuts the JSON payload out of a raw model reply: drops markdown fence
// lines and any prose around the first top-level object. When the object
// never closes, returns everything from the first '{' (the repair parser
// closes open scopes). Throws ParseError when no '{' exists.
std::string extract_json_block(std::string_view raw);

struct RepairResult {
    nlohmann::ordered_json value;
    std::vector<std::string> warnings;  // one entry per repair applied
};

// Tolerant JSON parser. Strict JSON passes through byte-equivalently; the
// repairs below are applied deterministically, in scan order, each leaving
// a warning:
//   - single-quoted strings, unquoted object keys
//   - Python literals None/True/False (and NaN/Infinity -> null)
//   - trailing, leading and doubled commas; missing commas between members
//   - unescaped control characters (incl. newlines) inside strings
//   - // and /* */ comments
//   - mismatched or missing closers; truncated input closes all open
//     strings, arrays and objects ("closed N open scopes")
// Throws ParseError when nothing parseable remains.
RepairResult repair_and_parse(std::string_view text);

// Shapes a repaired value into a judgment: unknown keys dropped, score
// coerced from numbers or numeric strings and clamped to [0,100], severity
// taken from the containing list, annotations without any error phrase
// dropped. Every adjustment lands in parse_warnings. Throws ValidationError
// when both the score and the errors object are missing.
QEJudgment validate_judgment(const nlohmann::ordered_json& value);

// extract + repair + validate with merged warnings.
QEJudgment judgment_from_raw(std::string_view raw);

}  // namespace mtqe
