#include "datamix/longctx/anneal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "datamix/common/error.hpp"

namespace datamix::longctx {

double cosine_lr(std::int64_t step, std::int64_t total_steps, double peak, double warmup_frac) {
    if (total_steps <= 0) throw ValidationError("total_steps", "must be positive");
    if (!(peak > 0.0)) throw ValidationError("peak", "must be positive");
    if (!(warmup_frac > 0.0 && warmup_frac < 1.0)) throw ValidationError("warmup_frac", "must lie in (0, 1)");
    if (step < 0 || step > total_steps) {
        throw Error("step_out_of_range",
                    "step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + "]");
    }
    const double total = static_cast<double>(total_steps);
    const double s = static_cast<double>(step);
    const double warmup = warmup_frac * total;
    if (s < warmup) return peak * (s / warmup);

    const double floor_lr = kMinLrFraction * peak;
    const double progress = (s - warmup) / (total - warmup);
    // Convex blend of peak and floor: exact at both ends of the decay.
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    return w * peak + (1.0 - w) * floor_lr;
}

double rope_base_for(std::uint64_t target_context) {
    switch (target_context) {
        case 32768: return 1e6;
        case 131072: return 8e6;
        case 262144: return 4e7;
        default:
            throw Error("unknown_context", "no RoPE base for target context " + std::to_string(target_context) +
                                               " (supported: 32768, 131072, 262144)");
    }
}

std::vector<AnnealStage> anneal_plan(const std::vector<std::uint64_t>& targets,
                                     const std::vector<std::uint64_t>& prev_stage_steps, const LrConfig& lr) {
    if (targets.empty()) throw ValidationError("targets", "at least one target context is required");
    if (!(lr.pretrain_lr > 0.0)) throw ValidationError("pretrain_lr", "must be positive");
    if (!(lr.warmup_frac > 0.0 && lr.warmup_frac < 1.0)) throw ValidationError("warmup_frac", "must lie in (0, 1)");
    if (prev_stage_steps.size() + 1 < targets.size()) {
        throw ValidationError("prev_stage_steps", "need one step count per preceding annealing stage");
    }

    std::vector<AnnealStage> plan;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (k > 0 && targets[k] <= targets[k - 1]) {
            throw ValidationError("targets", "target contexts must strictly increase");
        }
        AnnealStage stage;
        stage.target_context = targets[k];
        stage.rope_base = rope_base_for(targets[k]);
        if (k < prev_stage_steps.size()) stage.total_steps = prev_stage_steps[k];
        if (k == 0) {
            stage.initial_lr = lr.pretrain_lr;
        } else {
            const std::uint64_t prev_total = prev_stage_steps[k - 1];
            if (prev_total == 0) throw ValidationError("prev_stage_steps", "stage lengths must be positive");
            stage.resume_step = prev_total / 3;
            stage.initial_lr = cosine_lr(static_cast<std::int64_t>(*stage.resume_step),
                                         static_cast<std::int64_t>(prev_total), plan.back().initial_lr, lr.warmup_frac);
        }
        plan.push_back(stage);
    }
    return plan;
}

json plan_to_json(const std::vector<AnnealStage>& plan) {
    json stages = json::array();
    for (std::size_t k = 0; k < plan.size(); ++k) {
        const auto& s = plan[k];
        json row = {{"stage", k},
                    {"target_context", s.target_context},
                    {"rope_base", s.rope_base},
                    {"token_budget", s.token_budget},
                    {"resume_fraction", s.resume_fraction},
                    {"initial_lr", s.initial_lr}};
        row["resume_step"] = s.resume_step ? json(*s.resume_step) : json(nullptr);
        row["total_steps"] = s.total_steps ? json(*s.total_steps) : json(nullptr);
        stages.push_back(std::move(row));
    }
    return {{"stages", std::move(stages)}};
}

}  // namespace datamix::longctx
