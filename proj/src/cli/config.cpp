#include "datamix/cli/config.hpp"

#include <cmath>
#include <set>

#include "datamix/common/error.hpp"
#include "datamix/common/parallel.hpp"
#include "datamix/longctx/anneal.hpp"

namespace datamix::cli {

namespace {

// Reads typed keys out of one JSON object and rejects keys it never read.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ValidationError(name_.empty() ? "config" : name_, "must be a JSON object");
    }

    std::string field(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    template <typename T>
    void read(const std::string& key, T& dst) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ValidationError(field(key), "must be a boolean");
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
                    throw ValidationError(field(key), "must be a non-negative integer");
                }
            } else if constexpr (std::is_same_v<T, double>) {
                if (!it->is_number()) throw ValidationError(field(key), "must be a number");
            }
            dst = it->get<T>();
        } catch (const json::exception& e) {
            throw ValidationError(field(key), e.what());
        }
    }

    template <typename T>
    void read_optional(const std::string& key, std::optional<T>& dst) {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end() && !it->is_null()) {
            T v{};
            read(key, v);
            dst = v;
        }
    }

    std::optional<Section> sub(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return std::nullopt;
        return Section(*it, field(key));
    }

    const json* raw(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [key, v] : j_.items()) {
            if (!seen_.count(key)) throw ValidationError(field(key), "unknown configuration key");
        }
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

}  // namespace

std::size_t PipelineConfig::effective_threads() const { return threads == 0 ? default_threads() : threads; }

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    Section root(j, "");
    root.read("seed", c.seed);
    root.read("threads", c.threads);

    if (auto s = root.sub("filter")) {
        s->read("min_chars", c.filter.min_chars);
        s->read("punct_ratio_min", c.filter.punct_ratio_min);
        s->read("punct_ratio_max", c.filter.punct_ratio_max);
        s->read("dirty_word_max_ratio", c.filter.dirty_word_max_ratio);
        s->read("code_min_stars", c.filter.code_min_stars);
        s->read("dirty_words", c.filter.dirty_words);
        s->read_optional("dirty_words_file", c.dirty_words_file);
        s->finish();
    }
    if (auto s = root.sub("dedup")) {
        if (const json* levels = s->raw("levels")) {
            if (!levels->is_array()) throw ValidationError(s->field("levels"), "must be an array");
            c.dedup.levels = {false, false, false};
            for (const auto& l : *levels) {
                const std::string name = l.is_string() ? l.get<std::string>() : l.dump();
                if (name == "url") {
                    c.dedup.levels.url = true;
                } else if (name == "document") {
                    c.dedup.levels.document = true;
                } else if (name == "paragraph") {
                    c.dedup.levels.paragraph = true;
                } else {
                    throw ValidationError(s->field("levels"), "unknown level '" + name + "'");
                }
            }
        }
        s->read("min_paragraph_chars", c.dedup.min_paragraph_chars);
        s->read("tracking_prefixes", c.dedup.url_options.tracking_prefixes);
        s->finish();
    }
    if (auto s = root.sub("scorer")) {
        s->read_optional("url", c.scorer.url);
        s->read_optional("command", c.scorer.command);
        s->read("retries", c.scorer.retries);
        s->read("timeout_ms", c.scorer.timeout_ms);
        s->read("backoff_ms", c.scorer.backoff_ms);
        s->read_optional("min_score", c.scorer.min_score);
        s->finish();
    }
    if (auto s = root.sub("cluster")) {
        s->read("k", c.cluster.k);
        s->read("max_iters", c.cluster.max_iters);
        s->read("cos_threshold", c.cluster.cos_threshold);
        s->finish();
    }
    if (auto s = root.sub("mix")) {
        s->read("kappa", c.mix.kappa);
        s->read("mu", c.mix.mu);
        s->read("max_rounds", c.mix.max_rounds);
        s->finish();
    }
    if (auto s = root.sub("buckets")) {
        s->read("boundaries", c.buckets.boundaries);
        s->finish();
    }
    if (auto s = root.sub("blend")) {
        s->read("short_fraction", c.blend.spec.short_fraction);
        s->read("domain_upsample", c.blend.spec.domain_upsample);
        s->read("n_units", c.blend.n_units);
        std::string unit = c.blend.spec.unit == longctx::BlendUnit::tokens ? "tokens" : "samples";
        s->read("unit", unit);
        if (unit == "tokens") {
            c.blend.spec.unit = longctx::BlendUnit::tokens;
        } else if (unit == "samples") {
            c.blend.spec.unit = longctx::BlendUnit::samples;
        } else {
            throw ValidationError(s->field("unit"), "must be 'tokens' or 'samples'");
        }
        s->finish();
    }
    if (auto s = root.sub("anneal")) {
        s->read("targets", c.anneal.targets);
        s->read("prev_stage_steps", c.anneal.prev_stage_steps);
        s->read("pretrain_lr", c.anneal.pretrain_lr);
        s->read("warmup_frac", c.anneal.warmup_frac);
        s->read("token_budget", c.anneal.token_budget);
        s->finish();
    }
    if (auto s = root.sub("pairs")) {
        s->read("k", c.pairs_k);
        s->finish();
    }
    if (auto s = root.sub("reward")) {
        std::string mode = c.reward_bounds == rl::BoundsMode::batch ? "batch" : "fixed";
        s->read("bounds_mode", mode);
        if (mode == "fixed") {
            c.reward_bounds = rl::BoundsMode::fixed;
        } else if (mode == "batch") {
            c.reward_bounds = rl::BoundsMode::batch;
        } else {
            throw ValidationError(s->field("bounds_mode"), "must be 'fixed' or 'batch'");
        }
        s->read("score_min", c.reward_score_bounds.first);
        s->read("score_max", c.reward_score_bounds.second);
        s->finish();
    }
    if (auto s = root.sub("curriculum")) {
        s->read("stages", c.curriculum_stages);
        s->finish();
    }
    if (auto s = root.sub("pack")) {
        s->read("max_len", c.pack.max_len);
        s->read("strict", c.pack.strict);
        std::string mode = pack::mode_name(c.pack.mode);
        s->read("mode", mode);
        in_section("pack", [&] { c.pack.mode = pack::parse_mode(mode); });
        s->finish();
    }
    if (auto s = root.sub("avg")) {
        s->read("window", c.avg_window);
        s->finish();
    }
    root.finish();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

void PipelineConfig::validate() const {
    in_section("filter", [&] { filter.validate(); });
    if (dedup.min_paragraph_chars == 0) throw ValidationError("dedup.min_paragraph_chars", "must be positive");
    if (scorer.url && scorer.command) throw ValidationError("scorer", "set either url or command, not both");
    if (scorer.min_score && !std::isfinite(*scorer.min_score)) throw ValidationError("scorer.min_score", "must be finite");
    if (cluster.k == 0) throw ValidationError("cluster.k", "must be positive");
    if (cluster.max_iters == 0) throw ValidationError("cluster.max_iters", "must be positive");
    if (!(cluster.cos_threshold > 0.0 && cluster.cos_threshold <= 1.0)) {
        throw ValidationError("cluster.cos_threshold", "must lie in (0, 1]");
    }
    if (!(mix.kappa > 0.0) || !std::isfinite(mix.kappa)) throw ValidationError("mix.kappa", "must be positive");
    if (!(mix.mu > 0.0) || !std::isfinite(mix.mu)) throw ValidationError("mix.mu", "must be positive");
    if (mix.max_rounds == 0) throw ValidationError("mix.max_rounds", "must be positive");
    in_section("buckets", [&] { buckets.validate(); });
    in_section("blend", [&] { blend.spec.validate(); });
    for (const auto t : anneal.targets) {
        try {
            (void)longctx::rope_base_for(t);
        } catch (const Error& e) {
            throw ValidationError("anneal.targets", e.what());
        }
    }
    if (anneal.pretrain_lr < 0.0 || !std::isfinite(anneal.pretrain_lr)) {
        throw ValidationError("anneal.pretrain_lr", "must be non-negative");
    }
    if (!(anneal.warmup_frac > 0.0 && anneal.warmup_frac < 1.0)) {
        throw ValidationError("anneal.warmup_frac", "must lie in (0, 1)");
    }
    if (anneal.token_budget == 0) throw ValidationError("anneal.token_budget", "must be positive");
    if (pairs_k == 0) throw ValidationError("pairs.k", "must be positive");
    if (!(reward_score_bounds.first < reward_score_bounds.second)) {
        throw ValidationError("reward.score_min", "must be below reward.score_max");
    }
    if (curriculum_stages == 0) throw ValidationError("curriculum.stages", "must be positive");
    if (pack.max_len == 0) throw ValidationError("pack.max_len", "must be positive");
    if (avg_window < 2) throw ValidationError("avg.window", "must be at least 2");
}

json config_to_json(const PipelineConfig& c) {
    json levels = json::array();
    if (c.dedup.levels.url) levels.push_back("url");
    if (c.dedup.levels.document) levels.push_back("document");
    if (c.dedup.levels.paragraph) levels.push_back("paragraph");
    json j = {
        {"seed", c.seed},
        {"threads", c.threads},
        {"filter",
         {{"min_chars", c.filter.min_chars},
          {"punct_ratio_min", c.filter.punct_ratio_min},
          {"punct_ratio_max", c.filter.punct_ratio_max},
          {"dirty_word_max_ratio", c.filter.dirty_word_max_ratio},
          {"code_min_stars", c.filter.code_min_stars},
          {"dirty_words", c.filter.dirty_words}}},
        {"dedup",
         {{"levels", levels},
          {"min_paragraph_chars", c.dedup.min_paragraph_chars},
          {"tracking_prefixes", c.dedup.url_options.tracking_prefixes}}},
        {"scorer",
         {{"retries", c.scorer.retries}, {"timeout_ms", c.scorer.timeout_ms}, {"backoff_ms", c.scorer.backoff_ms}}},
        {"cluster", {{"k", c.cluster.k}, {"max_iters", c.cluster.max_iters}, {"cos_threshold", c.cluster.cos_threshold}}},
        {"mix", {{"kappa", c.mix.kappa}, {"mu", c.mix.mu}, {"max_rounds", c.mix.max_rounds}}},
        {"buckets", {{"boundaries", c.buckets.boundaries}}},
        {"blend",
         {{"short_fraction", c.blend.spec.short_fraction},
          {"domain_upsample", c.blend.spec.domain_upsample},
          {"unit", c.blend.spec.unit == longctx::BlendUnit::tokens ? "tokens" : "samples"},
          {"n_units", c.blend.n_units}}},
        {"anneal",
         {{"targets", c.anneal.targets},
          {"prev_stage_steps", c.anneal.prev_stage_steps},
          {"pretrain_lr", c.anneal.pretrain_lr},
          {"warmup_frac", c.anneal.warmup_frac},
          {"token_budget", c.anneal.token_budget}}},
        {"pairs", {{"k", c.pairs_k}}},
        {"reward",
         {{"bounds_mode", c.reward_bounds == rl::BoundsMode::batch ? "batch" : "fixed"},
          {"score_min", c.reward_score_bounds.first},
          {"score_max", c.reward_score_bounds.second}}},
        {"curriculum", {{"stages", c.curriculum_stages}}},
        {"pack", {{"max_len", c.pack.max_len}, {"mode", pack::mode_name(c.pack.mode)}, {"strict", c.pack.strict}}},
        {"avg", {{"window", c.avg_window}}},
    };
    if (c.dirty_words_file) j["filter"]["dirty_words_file"] = *c.dirty_words_file;
    if (c.scorer.url) j["scorer"]["url"] = *c.scorer.url;
    if (c.scorer.command) j["scorer"]["command"] = *c.scorer.command;
    if (c.scorer.min_score) j["scorer"]["min_score"] = *c.scorer.min_score;
    return j;
}

}  // namespace datamix::cli
