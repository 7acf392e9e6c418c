#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::longctx {

// Linear warmup from 0 to `peak` over warmup_frac * total_steps, then cosine
// decay to 0.1 * peak at total_steps. Raises "step_out_of_range" unless
// 0 <= step <= total_steps.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double peak, double warmup_frac);

inline constexpr double kMinLrFraction = 0.1;
inline constexpr std::uint64_t kDefaultAnnealTokens = 50'000'000'000ULL;

// RoPE base for a supported target context; throws "unknown_context" otherwise.
double rope_base_for(std::uint64_t target_context);

struct LrConfig {
    double pretrain_lr = 0.0;  // LR of the 8K pre-training stage
    double warmup_frac = 0.001;
};

struct AnnealStage {
    std::uint64_t target_context = 0;
    double rope_base = 0.0;
    std::uint64_t token_budget = kDefaultAnnealTokens;
    double resume_fraction = 1.0 / 3.0;
    double initial_lr = 0.0;
    // Step of the previous annealing stage whose weights seed this one.
    std::optional<std::uint64_t> resume_step;
    std::optional<std::uint64_t> total_steps;
};

// One stage per target (strictly increasing, each in {32K, 128K, 256K}).
// Stage 0 starts at the pre-training LR; stage k resumes from step
// floor(prev_stage_steps[k-1] / 3) of stage k-1 and takes the LR of stage
// k-1's schedule at that step. prev_stage_steps needs at least
// targets.size() - 1 entries; entry k, when present, is stage k's length.
std::vector<AnnealStage> anneal_plan(const std::vector<std::uint64_t>& targets,
                                     const std::vector<std::uint64_t>& prev_stage_steps, const LrConfig& lr);

json plan_to_json(const std::vector<AnnealStage>& plan);

}  // namespace datamix::longctx
