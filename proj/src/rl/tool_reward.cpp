#include "datamix/rl/tool_reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "datamix/common/error.hpp"
#include "datamix/common/text.hpp"

namespace datamix::rl {

namespace {

std::vector<std::string> type_list(const json& spec) {
    std::vector<std::string> out;
    if (spec.is_string()) {
        out.push_back(spec.get<std::string>());
    } else if (spec.is_object()) {
        if (auto it = spec.find("type"); it != spec.end()) return type_list(*it);
    } else if (spec.is_array()) {
        for (const auto& t : spec) {
            if (t.is_string()) out.push_back(t.get<std::string>());
        }
    }
    return out;
}

FunctionSpec function_from_json(const json& j) {
    const json& f = j.contains("function") && j.at("function").is_object() ? j.at("function") : j;
    FunctionSpec spec;
    try {
        spec.name = f.at("name").get<std::string>();
        if (auto it = f.find("parameters"); it != f.end() && it->is_object()) {
            if (auto props = it->find("properties"); props != it->end() && props->is_object()) {
                for (const auto& [name, p] : props->items()) spec.params[name] = type_list(p);
            }
            if (auto req = it->find("required"); req != it->end() && req->is_array()) {
                spec.required = req->get<std::vector<std::string>>();
            }
        } else if (auto it2 = f.find("params"); it2 != f.end() && it2->is_object()) {
            for (const auto& [name, t] : it2->items()) spec.params[name] = type_list(t);
        }
    } catch (const json::exception& e) {
        throw Error("bad_schema", std::string("function schema: ") + e.what());
    }
    return spec;
}

bool type_complies(const json& v, const std::string& type) {
    if (type == "string") return v.is_string();
    if (type == "integer") {
        if (v.is_number_integer()) return true;
        return v.is_number_float() && std::isfinite(v.get<double>()) && std::floor(v.get<double>()) == v.get<double>();
    }
    if (type == "number") return v.is_number();
    if (type == "boolean") return v.is_boolean();
    if (type == "array") return v.is_array();
    if (type == "object") return v.is_object();
    if (type == "null") return v.is_null();
    return true;  // unknown type names impose no constraint
}

std::string strip_wrappers(std::string_view s) {
    s = text::trim(s);
    for (auto [open, close] : {std::pair<std::string_view, std::string_view>{"<tool_call>", "</tool_call>"},
                               {"```json", "```"},
                               {"```", "```"}}) {
        if (s.substr(0, open.size()) == open) {
            s.remove_prefix(open.size());
            const std::size_t end = s.rfind(close);
            if (end != std::string_view::npos) s = s.substr(0, end);
            s = text::trim(s);
            break;
        }
    }
    return std::string(s);
}

}  // namespace

ToolSchema schema_from_json(const json& j) {
    ToolSchema schema;
    if (j.is_array()) {
        for (const auto& f : j) schema.push_back(function_from_json(f));
    } else if (j.is_object()) {
        schema.push_back(function_from_json(j));
    } else if (!j.is_null()) {
        throw Error("bad_schema", "tool schema must be an object or an array of objects");
    }
    return schema;
}

std::optional<ToolCall> parse_tool_call(const json& output) {
    json obj = output;
    if (output.is_string()) {
        try {
            obj = json::parse(strip_wrappers(output.get<std::string>()));
        } catch (const json::exception&) {
            return std::nullopt;
        }
    }
    if (obj.is_array() && obj.size() == 1) obj = obj.front();
    if (!obj.is_object()) return std::nullopt;
    if (auto it = obj.find("function"); it != obj.end() && it->is_object()) obj = *it;
    auto name = obj.find("name");
    if (name == obj.end() || !name->is_string()) return std::nullopt;

    ToolCall call;
    call.name = name->get<std::string>();
    for (const char* key : {"arguments", "parameters", "args"}) {
        auto it = obj.find(key);
        if (it == obj.end()) continue;
        json args = *it;
        if (args.is_string()) {
            try {
                args = json::parse(args.get<std::string>());
            } catch (const json::exception&) {
                return std::nullopt;
            }
        }
        if (!args.is_object()) return std::nullopt;
        call.arguments = std::move(args);
        break;
    }
    return call;
}

bool values_match(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>();
        const double y = b.get<double>();
        return std::abs(x - y) <= 1e-9 * std::max(std::abs(x), std::abs(y));
    }
    if (a.type() != b.type()) return false;
    if (a.is_array()) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!values_match(a[i], b[i])) return false;
        }
        return true;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) return false;
        for (const auto& [k, v] : a.items()) {
            auto it = b.find(k);
            if (it == b.end() || !values_match(v, *it)) return false;
        }
        return true;
    }
    return a == b;
}

ToolValidation validate_tool_call(const json& output, const ToolSchema& schema, const json& reference) {
    if (schema.empty()) throw ValidationError("schema", "must declare at least one function");
    ToolValidation v;
    const auto call = parse_tool_call(output);
    if (!call) {
        v.diagnostics.push_back({"unparseable", "output is not a structured tool call"});
        return v;
    }
    auto fn = std::find_if(schema.begin(), schema.end(), [&](const FunctionSpec& f) { return f.name == call->name; });
    if (fn == schema.end()) {
        v.diagnostics.push_back({"unknown_tool", call->name});
        return v;
    }
    bool ok = true;
    for (const auto& [param, value] : call->arguments.items()) {
        auto decl = fn->params.find(param);
        if (decl == fn->params.end()) {
            v.diagnostics.push_back({"unknown_param", param});
            ok = false;
            continue;
        }
        const auto& types = decl->second;
        if (!types.empty() &&
            std::none_of(types.begin(), types.end(), [&](const std::string& t) { return type_complies(value, t); })) {
            v.diagnostics.push_back({"type_mismatch", param});
            ok = false;
        }
    }
    for (const auto& req : fn->required) {
        if (!call->arguments.contains(req)) {
            v.diagnostics.push_back({"missing_required", req});
            ok = false;
        }
    }
    v.format = ok;
    if (!v.format) return v;

    const auto ref = parse_tool_call(reference);
    if (!ref) {
        v.diagnostics.push_back({"bad_reference", "reference is not a structured tool call"});
        return v;
    }
    bool match = true;
    if (ref->name != call->name) {
        v.diagnostics.push_back({"name_mismatch", call->name + " != " + ref->name});
        match = false;
    } else {
        for (const auto& [param, value] : ref->arguments.items()) {
            auto it = call->arguments.find(param);
            if (it == call->arguments.end()) {
                v.diagnostics.push_back({"missing_param", param});
                match = false;
            } else if (!values_match(*it, value)) {
                v.diagnostics.push_back({"value_mismatch", param});
                match = false;
            }
        }
        for (const auto& [param, value] : call->arguments.items()) {
            if (!ref->arguments.contains(param)) {
                v.diagnostics.push_back({"extra_param", param});
                match = false;
            }
        }
    }
    v.match = match;
    return v;
}

ToolCallRecord tool_record_from_json(const json& row) {
    ToolCallRecord r;
    try {
        const json& id = row.at("id");
        r.id = id.is_string() ? id.get<std::string>() : id.dump();
        const json& flag = row.at("requires_tool");
        r.requires_tool = flag.is_boolean() ? flag.get<bool>() : flag.get<int>() != 0;
        r.output = row.value("output", json());
        r.reference = row.value("reference", json());
        r.schema = schema_from_json(row.value("schema", json()));
        if (auto it = row.find("judge_score"); it != row.end() && !it->is_null()) r.judge_score = it->get<double>();
        if (auto it = row.find("score_bounds"); it != row.end() && !it->is_null()) {
            r.score_bounds = {it->at(0).get<double>(), it->at(1).get<double>()};
        }
    } catch (const json::exception& e) {
        throw Error("bad_tool_record", std::string("tool-call record: ") + e.what());
    }
    return r;
}

double tool_reward(const ToolCallRecord& record, const ToolValidation& validation) {
    if (record.requires_tool) return validation.format && validation.match ? 1.0 : -1.0;
    const auto [lo, hi] = record.score_bounds;
    if (!(lo < hi)) throw Error("bad_bounds", "record " + record.id + ": S_min must be below S_max");
    if (!record.judge_score) throw Error("missing_score", "record " + record.id + ": tool-free item without a judge score");
    const double s = *record.judge_score;
    if (!(s >= lo && s <= hi)) {
        throw Error("score_out_of_bounds", "record " + record.id + ": score " + std::to_string(s) + " outside [" +
                                               std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return 2.0 * (s - lo) / (hi - lo) - 1.0;
}

json RewardRow::to_json() const {
    json row = {{"id", id}, {"reward", reward}};
    json diags = json::array();
    if (validation) {
        row["format_ok"] = validation->format;
        row["match_ok"] = validation->match;
        for (const auto& d : validation->diagnostics) diags.push_back({{"code", d.code}, {"detail", d.detail}});
    }
    row["diagnostics"] = std::move(diags);
    return row;
}

std::vector<RewardRow> reward_batch(const std::vector<ToolCallRecord>& records, BoundsMode mode) {
    std::optional<std::pair<double, double>> batch_bounds;
    if (mode == BoundsMode::batch) {
        double lo = INFINITY;
        double hi = -INFINITY;
        for (const auto& r : records) {
            if (!r.requires_tool && r.judge_score) {
                lo = std::min(lo, *r.judge_score);
                hi = std::max(hi, *r.judge_score);
            }
        }
        if (lo < hi) {
            batch_bounds = std::pair{lo, hi};
        } else if (lo <= hi) {
            throw Error("bad_bounds", "batch bounds are degenerate: every tool-free score equals " + std::to_string(lo));
        }
    }
    std::vector<RewardRow> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        RewardRow row{rec.id, 0.0, std::nullopt};
        if (rec.requires_tool) {
            row.validation = validate_tool_call(rec.output, rec.schema, rec.reference);
            row.reward = tool_reward(rec, *row.validation);
        } else if (batch_bounds) {
            ToolCallRecord copy = rec;
            copy.score_bounds = *batch_bounds;
            row.reward = tool_reward(copy, {});
        } else {
            row.reward = tool_reward(rec, {});
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace datamix::rl
