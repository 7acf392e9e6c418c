#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::rl {

enum class ConstraintKind { max_words, min_words, paragraph_count, keyword_count, ends_with, starts_with };

struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::max_words;
    std::uint64_t count = 0;  // word / paragraph / keyword counts
    std::string text;         // keyword or affix

    void validate() const;
};

// {"kind": "max_words", "value": 10}, {"kind": "keyword_count",
// "keyword": "alpha", "count": 2}, {"kind": "ends_with", "text": "..."}.
// Raises "unknown_constraint" for unsupported kinds.
ConstraintSpec constraint_from_json(const json& j);

std::string kind_name(ConstraintKind kind);

struct ConstraintOutcome {
    ConstraintSpec spec;
    bool pass = false;
    std::uint64_t observed = 0;
};

struct ConstraintCheck {
    std::vector<ConstraintOutcome> outcomes;
    bool pass = true;

    json to_json() const;
};

// Words are whitespace-separated tokens, paragraphs blank-line-separated
// blocks; keyword counting is case-insensitive over substrings. Affixes are
// compared against the whitespace-trimmed response.
ConstraintCheck validate_constraints(const std::string& response, const std::vector<ConstraintSpec>& constraints);

}  // namespace datamix::rl
