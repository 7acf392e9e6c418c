#include "datamix/rl/stratify.hpp"

#include <algorithm>

#include "datamix/common/error.hpp"
#include "datamix/common/rng.hpp"

namespace datamix::rl {

RolloutRecord rollout_from_json(const json& row) {
    RolloutRecord r;
    try {
        const json& pid = row.at("prompt_id");
        r.prompt_id = pid.is_string() ? pid.get<std::string>() : pid.dump();
        for (const auto& a : row.at("attempts")) {
            if (a.is_boolean()) {
                r.attempts.push_back(a.get<bool>());
            } else if (a.is_number_integer() && (a.get<int>() == 0 || a.get<int>() == 1)) {
                r.attempts.push_back(a.get<int>() == 1);
            } else {
                throw Error("bad_rollout", "attempt outcomes must be booleans for prompt " + r.prompt_id);
            }
        }
        r.domain = row.value("domain", std::string{});
    } catch (const json::exception& e) {
        throw Error("bad_rollout", std::string("rollout record: ") + e.what());
    }
    if (r.attempts.empty()) throw Error("empty_attempts", "prompt " + r.prompt_id + " has no attempts");
    return r;
}

json rollout_to_json(const RolloutRecord& r) {
    json attempts = json::array();
    for (bool a : r.attempts) attempts.push_back(a);
    json row = {{"prompt_id", r.prompt_id}, {"attempts", std::move(attempts)}};
    if (!r.domain.empty()) row["domain"] = r.domain;
    return row;
}

std::string_view tier_name(Tier t) {
    switch (t) {
        case Tier::easy: return "easy";
        case Tier::medium: return "medium";
        case Tier::hard: return "hard";
    }
    return "unknown";
}

double pass_rate(const RolloutRecord& record) {
    if (record.attempts.empty()) throw Error("empty_attempts", "prompt " + record.prompt_id + " has no attempts");
    const auto correct = std::count(record.attempts.begin(), record.attempts.end(), true);
    return static_cast<double>(correct) / static_cast<double>(record.attempts.size());
}

Tier tier(double rate) {
    if (rate >= 1.0) return Tier::easy;
    if (rate <= 0.0) return Tier::hard;
    return Tier::medium;
}

json ComposedSet::report() const {
    return {{"medium", medium}, {"hard", hard}, {"total", items.size()}};
}

ComposedSet compose_rl_set(const std::vector<RolloutRecord>& medium, const std::vector<RolloutRecord>& hard,
                           std::uint64_t seed) {
    if (medium.empty() || hard.empty()) {
        throw Error("insufficient_tier", "need medium and hard items (got " + std::to_string(medium.size()) +
                                             " medium, " + std::to_string(hard.size()) + " hard)");
    }
    std::size_t m = std::min(medium.size(), 2 * hard.size());
    m -= m % 2;
    if (m == 0) throw Error("insufficient_tier", "a single medium item cannot be paired 2:1 with hard items");
    const std::size_t h = m / 2;

    Rng rng(seed);
    ComposedSet out;
    for (std::size_t i : sample_without_replacement(medium.size(), m, rng)) {
        out.items.push_back(medium[i]);
        out.tiers.push_back(Tier::medium);
    }
    for (std::size_t i : sample_without_replacement(hard.size(), h, rng)) {
        out.items.push_back(hard[i]);
        out.tiers.push_back(Tier::hard);
    }
    std::vector<std::size_t> perm(out.items.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    ComposedSet shuffled;
    for (std::size_t i : perm) {
        shuffled.items.push_back(std::move(out.items[i]));
        shuffled.tiers.push_back(out.tiers[i]);
    }
    shuffled.medium = m;
    shuffled.hard = h;
    return shuffled;
}

std::vector<std::vector<PromptRate>> curriculum_order(std::vector<PromptRate> prompts, std::size_t stages) {
    if (stages == 0) throw ValidationError("stages", "must be positive");
    if (stages > prompts.size()) {
        throw Error("too_many_stages", std::to_string(stages) + " stages for " + std::to_string(prompts.size()) +
                                           " prompts");
    }
    for (const auto& p : prompts) {
        if (!(p.rate >= 0.0 && p.rate <= 1.0)) {
            throw ValidationError("pass_rate", "rate for prompt " + p.prompt_id + " outside [0, 1]");
        }
    }
    std::stable_sort(prompts.begin(), prompts.end(), [](const PromptRate& a, const PromptRate& b) {
        if (a.rate != b.rate) return a.rate > b.rate;
        return a.prompt_id < b.prompt_id;
    });
    std::vector<std::vector<PromptRate>> out(stages);
    const std::size_t base = prompts.size() / stages;
    const std::size_t extra = prompts.size() % stages;
    std::size_t pos = 0;
    for (std::size_t s = 0; s < stages; ++s) {
        const std::size_t size = base + (s < extra ? 1 : 0);
        out[s].assign(prompts.begin() + static_cast<std::ptrdiff_t>(pos),
                      prompts.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return out;
}

}  // namespace datamix::rl
