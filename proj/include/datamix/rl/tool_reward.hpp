#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::rl {

// A structured tool invocation: name plus parameter map.
struct ToolCall {
    std::string name;
    json arguments = json::object();
};

struct FunctionSpec {
    std::string name;
    // parameter -> accepted JSON types ("string", "integer", "number",
    // "boolean", "array", "object", "null"); empty means any type.
    std::map<std::string, std::vector<std::string>> params;
    std::vector<std::string> required;
};

using ToolSchema = std::vector<FunctionSpec>;

// Accepts {"name", "parameters": {"properties": {...}, "required": [...]}},
// the {"type": "function", "function": {...}} wrapper, or a flat
// {"name", "params": {"p": "type"}} form.
ToolSchema schema_from_json(const json& j);

// Accepts an object or text. Text may be wrapped in <tool_call> tags or a
// ``` fence. Arguments come from "arguments", "parameters" or "args" and
// may themselves be a JSON-encoded string.
std::optional<ToolCall> parse_tool_call(const json& output);

struct Diagnostic {
    std::string code;
    std::string detail;
};

struct ToolValidation {
    bool format = false;  // M_format
    bool match = false;   // M_match
    std::vector<Diagnostic> diagnostics;
};

// M_format: parses, tool exists, all parameters declared, required ones
// present, value types comply. M_match additionally requires the reference
// name and an order-insensitive, type-aware equal parameter map (numbers
// within relative 1e-9). Raises ValidationError on an empty schema.
ToolValidation validate_tool_call(const json& output, const ToolSchema& schema, const json& reference);

// Type-aware deep equality used for M_match.
bool values_match(const json& a, const json& b);

struct ToolCallRecord {
    std::string id;
    bool requires_tool = false;  // I_tool
    json output;
    json reference;
    ToolSchema schema;
    std::optional<double> judge_score;  // S
    std::pair<double, double> score_bounds{0.0, 10.0};
};

ToolCallRecord tool_record_from_json(const json& row);

// +1 for a formatted, matching tool call; -1 for a failed one; the affine
// map 2 (S - S_min) / (S_max - S_min) - 1 for tool-free items.
// Raises "missing_score" or "score_out_of_bounds" for tool-free items, and
// "bad_bounds" unless S_min < S_max.
double tool_reward(const ToolCallRecord& record, const ToolValidation& validation);

enum class BoundsMode { fixed, batch };

struct RewardRow {
    std::string id;
    double reward = 0.0;
    std::optional<ToolValidation> validation;
    json to_json() const;
};

// Validates and scores every record. In batch mode tool-free S bounds come
// from the batch extremes rather than each record's score_bounds.
std::vector<RewardRow> reward_batch(const std::vector<ToolCallRecord>& records, BoundsMode mode = BoundsMode::fixed);

}  // namespace datamix::rl
