#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "datamix/common/jsonl.hpp"
#include "datamix/corpus/document.hpp"

namespace datamix::corpus {

struct FilterRuleSet {
    std::size_t min_chars = 50;
    double punct_ratio_min = 0.001;
    double punct_ratio_max = 0.30;
    std::vector<std::string> dirty_words;
    double dirty_word_max_ratio = 0.01;
    std::uint64_t code_min_stars = 5;

    // Raises ValidationError naming the offending field.
    void validate() const;
};

// Reason tags, in evaluation order.
inline constexpr const char* kTooShort = "too_short";
inline constexpr const char* kPunctAnomaly = "punct_anomaly";
inline constexpr const char* kDirtyWords = "dirty_words";
inline constexpr const char* kLowStars = "low_stars";

struct Verdict {
    bool keep = true;
    std::vector<std::string> reasons;
};

// Pre-processed rule set: dirty words lowercased into a hash set.
class HeuristicFilter {
public:
    explicit HeuristicFilter(FilterRuleSet rules);

    Verdict operator()(const Document& doc) const;

    const FilterRuleSet& rules() const { return rules_; }

private:
    FilterRuleSet rules_;
    std::unordered_set<std::string> dirty_;
};

Verdict heuristic_filter(const Document& doc, const FilterRuleSet& rules);

struct FilterReport {
    std::size_t kept = 0;
    std::size_t dropped = 0;
    // Keyed by each dropped document's first reason, so the values sum to `dropped`.
    std::map<std::string, std::size_t> dropped_by_reason;
    // Every fired reason counted, including secondary ones.
    std::map<std::string, std::size_t> reason_hits;
    std::vector<Verdict> verdicts;

    json to_json(const std::vector<Document>& docs) const;
};

struct FilterResult {
    std::vector<Document> kept;
    FilterReport report;
};

FilterResult filter_documents(const std::vector<Document>& docs, const FilterRuleSet& rules,
                              std::size_t threads = 1);

// One word per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> load_word_list(const std::filesystem::path& path);

}  // namespace datamix::corpus
