#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::rl {

struct RolloutRecord {
    std::string prompt_id;
    std::vector<bool> attempts;
    std::string domain;  // math | code | tool | text
};

RolloutRecord rollout_from_json(const json& row);
json rollout_to_json(const RolloutRecord& r);

enum class Tier { easy, medium, hard };

std::string_view tier_name(Tier t);

// Fraction of correct attempts. Raises "empty_attempts".
double pass_rate(const RolloutRecord& record);

// 1 -> easy, (0, 1) -> medium, 0 -> hard; valid for any attempt count n.
Tier tier(double rate);

struct ComposedSet {
    std::vector<RolloutRecord> items;  // shuffled
    std::vector<Tier> tiers;           // parallel to items
    std::size_t medium = 0;
    std::size_t hard = 0;

    json report() const;
};

// Medium:hard = 2:1. Takes m = min(|medium|, 2|hard|) rounded down to even
// and m/2 hard items, both sampled without replacement, then shuffles.
// Raises "insufficient_tier" when either list is empty or m would be 0.
ComposedSet compose_rl_set(const std::vector<RolloutRecord>& medium, const std::vector<RolloutRecord>& hard,
                           std::uint64_t seed);

struct PromptRate {
    std::string prompt_id;
    double rate = 0.0;
};

// Sorted by rate descending (prompt_id ascending on ties) and cut into
// `stages` contiguous groups whose sizes differ by at most one, larger
// groups first. Raises "too_many_stages" when stages exceeds the prompt
// count and ValidationError on stages == 0 or rates outside [0, 1].
std::vector<std::vector<PromptRate>> curriculum_order(std::vector<PromptRate> prompts, std::size_t stages);

}  // namespace datamix::rl
