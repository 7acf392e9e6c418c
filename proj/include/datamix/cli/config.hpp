#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datamix/common/error.hpp"
#include "datamix/common/jsonl.hpp"
#include "datamix/corpus/dedup.hpp"
#include "datamix/corpus/filter.hpp"
#include "datamix/longctx/blend.hpp"
#include "datamix/longctx/buckets.hpp"
#include "datamix/pack/packing.hpp"
#include "datamix/rl/tool_reward.hpp"

namespace datamix::cli {

struct ScorerConfig {
    std::optional<std::string> url;
    std::optional<std::string> command;
    std::size_t retries = 2;
    std::uint64_t timeout_ms = 30000;
    std::uint64_t backoff_ms = 0;
    std::optional<double> min_score;  // drop scored documents below this
};

struct ClusterConfig {
    std::size_t k = 8;
    std::size_t max_iters = 100;
    double cos_threshold = 0.95;
};

struct MixConfig {
    double kappa = 10.0;
    double mu = 15000.0;
    std::uint64_t max_rounds = 10;
};

struct BlendConfig {
    longctx::BlendSpec spec;
    std::uint64_t n_units = 0;
};

struct AnnealConfig {
    std::vector<std::uint64_t> targets{32768, 131072};
    std::vector<std::uint64_t> prev_stage_steps;
    double pretrain_lr = 0.0;
    double warmup_frac = 0.001;
    std::uint64_t token_budget = 50'000'000'000ULL;
};

struct PackConfig {
    std::uint64_t max_len = 8192;
    pack::PackMode mode = pack::PackMode::pretrain_concat;
    bool strict = true;
};

// Whole-pipeline configuration: one JSON document with a section per
// stage. Every section is optional; absent keys keep their defaults.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0 = hardware concurrency

    corpus::FilterRuleSet filter;
    std::optional<std::string> dirty_words_file;
    corpus::DedupOptions dedup;
    ScorerConfig scorer;
    ClusterConfig cluster;
    MixConfig mix;
    longctx::LengthBucketSpec buckets;
    BlendConfig blend;
    AnnealConfig anneal;
    std::size_t pairs_k = 4;
    rl::BoundsMode reward_bounds = rl::BoundsMode::fixed;
    std::pair<double, double> reward_score_bounds{0.0, 10.0};
    std::size_t curriculum_stages = 3;
    PackConfig pack;
    std::size_t avg_window = 5;

    std::size_t effective_threads() const;

    // Checks every numeric parameter against its owning module's
    // preconditions. Raises ValidationError whose field is "section.key".
    void validate() const;
};

// Raises ValidationError naming the offending "section.key" on type errors
// and unknown keys. Does not call validate().
PipelineConfig config_from_json(const json& j);
PipelineConfig load_config(const std::filesystem::path& path);

json config_to_json(const PipelineConfig& c);

// Runs fn and prefixes the field of any ValidationError with "section.".
template <typename Fn>
decltype(auto) in_section(const std::string& section, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        const std::size_t colon = msg.find(": ");
        throw ValidationError(section + "." + e.field(), colon == std::string::npos ? msg : msg.substr(colon + 2));
    }
}

}  // namespace datamix::cli
