#include "datamix/rl/constraints.hpp"

#include "datamix/common/error.hpp"
#include "datamix/common/text.hpp"

namespace datamix::rl {

namespace {

constexpr std::pair<ConstraintKind, const char*> kKinds[] = {
    {ConstraintKind::max_words, "max_words"},
    {ConstraintKind::min_words, "min_words"},
    {ConstraintKind::paragraph_count, "paragraph_count"},
    {ConstraintKind::keyword_count, "keyword_count"},
    {ConstraintKind::ends_with, "ends_with"},
    {ConstraintKind::starts_with, "starts_with"},
};

std::uint64_t count_occurrences(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return 0;
    std::uint64_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

}  // namespace

std::string kind_name(ConstraintKind kind) {
    for (auto [k, name] : kKinds) {
        if (k == kind) return name;
    }
    return "unknown";
}

void ConstraintSpec::validate() const {
    switch (kind) {
        case ConstraintKind::max_words:
        case ConstraintKind::min_words:
        case ConstraintKind::paragraph_count:
            if (count == 0) throw ValidationError(kind_name(kind), "count must be positive");
            break;
        case ConstraintKind::keyword_count:
            if (count == 0) throw ValidationError(kind_name(kind), "count must be positive");
            if (text.empty()) throw ValidationError(kind_name(kind), "keyword must be non-empty");
            break;
        case ConstraintKind::ends_with:
        case ConstraintKind::starts_with:
            if (text.empty()) throw ValidationError(kind_name(kind), "text must be non-empty");
            break;
    }
}

ConstraintSpec constraint_from_json(const json& j) {
    ConstraintSpec spec;
    const std::string kind = j.value("kind", std::string{});
    bool known = false;
    for (auto [k, name] : kKinds) {
        if (kind == name) {
            spec.kind = k;
            known = true;
        }
    }
    if (!known) throw Error("unknown_constraint", "unknown constraint kind '" + kind + "'");
    try {
        auto read_count = [&](std::initializer_list<const char*> keys) {
            for (const char* key : keys) {
                if (auto it = j.find(key); it != j.end()) {
                    const auto v = it->get<std::int64_t>();
                    if (v <= 0) throw ValidationError(kind, std::string(key) + " must be positive");
                    spec.count = static_cast<std::uint64_t>(v);
                    return;
                }
            }
            throw ValidationError(kind, "missing count");
        };
        switch (spec.kind) {
            case ConstraintKind::max_words:
            case ConstraintKind::min_words:
            case ConstraintKind::paragraph_count:
                read_count({"value", "count"});
                break;
            case ConstraintKind::keyword_count:
                spec.text = j.at("keyword").get<std::string>();
                read_count({"count", "value"});
                break;
            case ConstraintKind::ends_with:
            case ConstraintKind::starts_with:
                spec.text = j.contains("text") ? j.at("text").get<std::string>() : j.at("value").get<std::string>();
                break;
        }
    } catch (const json::exception& e) {
        throw ValidationError(kind, e.what());
    }
    spec.validate();
    return spec;
}

json ConstraintCheck::to_json() const {
    json rows = json::array();
    for (const auto& o : outcomes) {
        json row = {{"kind", kind_name(o.spec.kind)}, {"pass", o.pass}, {"observed", o.observed}};
        if (o.spec.count) row["count"] = o.spec.count;
        if (!o.spec.text.empty()) row["text"] = o.spec.text;
        rows.push_back(std::move(row));
    }
    return {{"pass", pass}, {"constraints", std::move(rows)}};
}

ConstraintCheck validate_constraints(const std::string& response, const std::vector<ConstraintSpec>& constraints) {
    ConstraintCheck check;
    const std::uint64_t words = text::split_whitespace(response).size();
    const std::string_view trimmed = text::trim(response);
    for (const auto& spec : constraints) {
        spec.validate();
        ConstraintOutcome o{spec, false, 0};
        switch (spec.kind) {
            case ConstraintKind::max_words:
                o.observed = words;
                o.pass = words <= spec.count;
                break;
            case ConstraintKind::min_words:
                o.observed = words;
                o.pass = words >= spec.count;
                break;
            case ConstraintKind::paragraph_count:
                o.observed = text::split_paragraphs(response).size();
                o.pass = o.observed == spec.count;
                break;
            case ConstraintKind::keyword_count:
                o.observed = count_occurrences(text::ascii_lower(response), text::ascii_lower(spec.text));
                o.pass = o.observed >= spec.count;
                break;
            case ConstraintKind::ends_with:
                o.pass = trimmed.ends_with(spec.text);
                o.observed = o.pass ? 1 : 0;
                break;
            case ConstraintKind::starts_with:
                o.pass = trimmed.starts_with(spec.text);
                o.observed = o.pass ? 1 : 0;
                break;
        }
        check.pass = check.pass && o.pass;
        check.outcomes.push_back(std::move(o));
    }
    return check;
}

}  // namespace datamix::rl
