#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::pref {

enum class ScoreKind { judge, rule_verified };

struct ResponseRecord {
    std::string prompt_id;
    std::string response;
    std::string source_model;
    bool on_policy = false;
    double score = 0.0;  // [0, 10]
    ScoreKind score_kind = ScoreKind::judge;
    std::string domain;
};

inline constexpr double kChosenMinScore = 8.0;
inline constexpr double kMinScoreGap = 2.0;
inline constexpr std::size_t kDefaultPairsPerPrompt = 4;

// Parses a record. Rule-verified rows may carry "passed": bool instead of a
// score, mapped fail -> 0 and pass -> 10. Raises "bad_response" on a score
// outside [0, 10].
ResponseRecord response_from_json(const json& row);

// Index of the chosen response: maximum score, gated at >= 8, preferring
// on-policy, then smallest source_model, then smallest response hash.
std::optional<std::size_t> select_chosen(const std::vector<ResponseRecord>& candidates);

// Indices (input order) of on-policy candidates at least 2 points below the
// chosen score, excluding the chosen record.
std::vector<std::size_t> select_rejected(const std::vector<ResponseRecord>& candidates, std::size_t chosen);

struct PreferencePair {
    std::string prompt_id;
    ResponseRecord chosen;
    ResponseRecord rejected;
};

// Pairs the chosen response with every eligible rejected one; more than K
// are sub-sampled uniformly without replacement from a stream seeded by
// (seed, prompt_id). Pairs keep the rejected candidates' input order.
std::vector<PreferencePair> build_pairs(const std::vector<ResponseRecord>& prompt_group, std::size_t k,
                                        std::uint64_t seed);

// Groups by prompt_id and builds pairs per group; output is ordered by
// prompt_id regardless of thread count.
std::vector<PreferencePair> build_all_pairs(const std::vector<ResponseRecord>& records, std::size_t k,
                                            std::uint64_t seed, std::size_t threads = 1);

json pair_to_json(const PreferencePair& pair);
PreferencePair pair_from_json(const json& row);

struct PairViolation {
    std::size_t index;
    std::string reason;
};

struct DatasetReport {
    std::size_t pair_count = 0;
    std::size_t prompt_count = 0;
    std::size_t max_pairs_per_prompt = 0;
    std::map<std::string, std::size_t> per_domain;
    // Score gap (chosen - rejected) -> count.
    std::map<double, std::size_t> gap_histogram;
    std::vector<PairViolation> violations;
    bool valid = true;

    json to_json() const;
};

// Summarizes and re-validates pairs (chosen >= 8, gap >= 2, rejected
// on-policy, matching prompt ids, and at most k pairs per prompt when k > 0).
DatasetReport dataset_report(const std::vector<PreferencePair>& pairs, std::size_t k = 0);

}  // namespace datamix::pref
