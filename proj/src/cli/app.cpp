#include "datamix/cli/app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "datamix/cli/config.hpp"
#include "datamix/common/error.hpp"
#include "datamix/corpus/dedup.hpp"
#include "datamix/corpus/document.hpp"
#include "datamix/corpus/filter.hpp"
#include "datamix/corpus/kmeans.hpp"
#include "datamix/corpus/scorer.hpp"
#include "datamix/longctx/anneal.hpp"
#include "datamix/longctx/blend.hpp"
#include "datamix/longctx/buckets.hpp"
#include "datamix/mix/mixer.hpp"
#include "datamix/pack/checkpoint.hpp"
#include "datamix/pack/packing.hpp"
#include "datamix/pref/pairs.hpp"
#include "datamix/rl/constraints.hpp"
#include "datamix/rl/math_verify.hpp"
#include "datamix/rl/stratify.hpp"
#include "datamix/rl/tool_reward.hpp"

namespace datamix::cli {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::string out;
};

// Flags specific to one subcommand; only the fields a command registers
// are ever set.
struct Flags {
    std::string in;
    std::vector<std::string> inputs;
    std::optional<std::string> dirty_words;
    std::optional<std::string> scorer_url;
    std::optional<std::string> scorer_cmd;
    std::optional<double> min_score;
    std::optional<std::string> levels;
    std::optional<std::size_t> min_paragraph_chars;
    std::optional<std::size_t> k;
    std::optional<std::size_t> max_iters;
    std::optional<double> cos_threshold;
    std::string logs;
    std::optional<std::string> state;
    std::optional<double> kappa;
    std::optional<double> mu;
    std::optional<std::uint64_t> max_rounds;
    std::optional<std::uint64_t> n_units;
    std::optional<double> ratio;
    std::optional<std::string> unit;
    std::vector<std::string> upsample;
    std::optional<std::string> targets;
    std::optional<std::string> prev_steps;
    std::optional<double> pretrain_lr;
    std::optional<double> warmup_frac;
    std::optional<std::uint64_t> token_budget;
    std::optional<std::string> bounds_mode;
    std::optional<std::size_t> stages;
    std::optional<std::uint64_t> max_len;
    std::optional<std::string> mode;
    bool lenient = false;
    std::optional<std::size_t> window;
};

struct Context {
    PipelineConfig config;
    fs::path out;

    std::size_t threads() const { return config.effective_threads(); }
    fs::path report_path() const { return fs::path(out.string() + ".report.json"); }
};

std::vector<std::uint64_t> parse_u64_list(const std::string& field, const std::string& text) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, comma - pos);
        if (!item.empty()) {
            std::uint64_t v = 0;
            const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (ec != std::errc{} || p != item.data() + item.size()) {
                throw ValidationError(field, "'" + item + "' is not a non-negative integer");
            }
            out.push_back(v);
        }
        pos = comma + 1;
    }
    return out;
}

std::vector<json> read_rows(const std::string& path) { return read_jsonl(fs::path(path)); }

std::string score_text(double v) { return json(v).dump(); }

// ---------------------------------------------------------------- corpus

json cmd_clean(Context& ctx, const Flags& f) {
    auto docs = corpus::read_documents(f.in);
    corpus::FilterRuleSet rules = ctx.config.filter;
    if (ctx.config.dirty_words_file) {
        for (auto& w : corpus::load_word_list(*ctx.config.dirty_words_file)) rules.dirty_words.push_back(std::move(w));
    }
    auto filtered = corpus::filter_documents(docs, rules, ctx.threads());
    json report = {{"filter", filtered.report.to_json(docs)}};

    const auto& sc = ctx.config.scorer;
    std::vector<corpus::Document> kept;
    if (sc.url || sc.command) {
        std::vector<corpus::ScoreItem> items;
        items.reserve(filtered.kept.size());
        for (const auto& d : filtered.kept) items.push_back({d.id, d.text});
        corpus::ScorerEndpoint endpoint;
        if (sc.url) {
            endpoint.target = corpus::HttpScorer{*sc.url, std::chrono::milliseconds(sc.timeout_ms)};
        } else {
            endpoint.target = corpus::CommandScorer{*sc.command};
        }
        endpoint.retries = sc.retries;
        endpoint.backoff = std::chrono::milliseconds(sc.backoff_ms);
        const auto batch = corpus::score_gateway(items, endpoint);
        std::size_t below = 0;
        for (std::size_t i = 0; i < filtered.kept.size(); ++i) {
            auto doc = std::move(filtered.kept[i]);
            const auto& rec = batch.records[i];
            if (rec.score) {
                doc.meta["quality_score"] = score_text(*rec.score);
                if (sc.min_score && *rec.score < *sc.min_score) {
                    ++below;
                    continue;
                }
            } else {
                doc.meta["quality_unscored"] = "true";
            }
            kept.push_back(std::move(doc));
        }
        report["scoring"] = batch.to_json();
        report["dropped_low_score"] = below;
    } else {
        kept = std::move(filtered.kept);
    }
    report["output"] = kept.size();
    corpus::write_documents(ctx.out, kept);
    return report;
}

json cmd_dedup(Context& ctx, const Flags& f) {
    const auto docs = corpus::read_documents(f.in);
    corpus::DedupOptions opt = ctx.config.dedup;
    opt.threads = ctx.threads();
    auto result = corpus::dedup_stream(docs, opt);
    corpus::write_documents(ctx.out, result.kept);
    return {{"dedup", result.report.to_json()}};
}

json cmd_cluster(Context& ctx, const Flags& f) {
    const auto rows = read_rows(f.in);
    std::vector<std::string> ids;
    std::vector<double> data;
    std::size_t dim = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const json& row = rows[i];
        const json* vec = nullptr;
        for (const char* key : {"embedding", "vector"}) {
            if (auto it = row.find(key); it != row.end()) vec = &*it;
        }
        if (!vec || !vec->is_array() || vec->empty()) {
            throw Error("bad_embedding", f.in + ": row " + std::to_string(i + 1) + " lacks a non-empty embedding array");
        }
        if (i == 0) dim = vec->size();
        if (vec->size() != dim) {
            throw Error("bad_embedding", f.in + ": row " + std::to_string(i + 1) + " has dimension " +
                                             std::to_string(vec->size()) + ", expected " + std::to_string(dim));
        }
        for (const auto& v : *vec) {
            if (!v.is_number()) throw Error("bad_embedding", f.in + ": row " + std::to_string(i + 1) + " has a non-numeric entry");
            data.push_back(v.get<double>());
        }
        const json& id = row.contains("id") ? row.at("id") : json(std::to_string(i));
        ids.push_back(id.is_string() ? id.get<std::string>() : id.dump());
    }
    const corpus::Matrix m(rows.size(), dim, std::move(data));
    const auto& cc = ctx.config.cluster;
    const auto result = in_section("cluster", [&] {
        return corpus::kmeans_cluster(m, {cc.k, ctx.config.seed, cc.max_iters});
    });
    const auto dups = in_section("cluster", [&] { return corpus::near_dup_groups(m, result, cc.cos_threshold); });

    std::vector<json> out;
    std::vector<std::size_t> sizes(result.k, 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.push_back({{"id", ids[i]}, {"cluster", result.assignments[i]}});
        ++sizes[result.assignments[i]];
    }
    write_jsonl(ctx.out, out);

    json groups = json::array();
    for (const auto& g : dups.groups) {
        json members = json::array();
        for (const auto i : g) members.push_back(ids[i]);
        groups.push_back(std::move(members));
    }
    json zero = json::array();
    for (const auto i : dups.zero_norm) zero.push_back(ids[i]);
    return {{"k", result.k},
            {"iterations", result.iterations},
            {"converged", result.converged},
            {"inertia", result.inertia},
            {"inertia_history", result.inertia_history},
            {"reseeded_clusters", result.reseeded_clusters},
            {"cluster_sizes", sizes},
            {"near_dup_groups", std::move(groups)},
            {"zero_norm", std::move(zero)}};
}

// ---------------------------------------------------------------- mix

json cmd_mix_step(Context& ctx, const Flags& f) {
    const auto logs = mix::read_observations(f.logs);
    mix::MixState state;
    if (f.state && fs::exists(*f.state)) {
        state = in_section("state", [&] { return mix::state_from_json(read_json_file(*f.state)); });
        if (f.kappa) state.kappa = *f.kappa;
        if (f.mu) state.mu = *f.mu;
        if (f.max_rounds) state.max_rounds = *f.max_rounds;
    } else {
        state.kappa = ctx.config.mix.kappa;
        state.mu = ctx.config.mix.mu;
        state.max_rounds = ctx.config.mix.max_rounds;
    }
    const auto result = in_section("mix", [&] { return mix::mix_iterate(logs, state); });
    write_json_file(ctx.out, mix::state_to_json(result.state));
    return result.report.to_json();
}

// ---------------------------------------------------------------- longctx

std::uint64_t require_tokens(const corpus::Document& d) {
    if (!d.token_count) throw Error("missing_token_count", "document " + d.id + " has no token_count");
    return *d.token_count;
}

fs::path bucket_file(const fs::path& dir, std::size_t b) { return dir / ("bucket-" + std::to_string(b) + ".jsonl"); }

json cmd_bucket(Context& ctx, const Flags& f) {
    const auto& spec = ctx.config.buckets;
    const auto docs = corpus::read_documents(f.in);
    std::vector<std::vector<json>> rows(spec.bucket_count());
    std::vector<std::uint64_t> tokens(spec.bucket_count(), 0);
    for (const auto& d : docs) {
        const std::uint64_t n = require_tokens(d);
        const std::size_t b = longctx::assign_bucket(n, spec);
        rows[b].push_back(corpus::document_to_json(d));
        tokens[b] += n;
    }
    fs::create_directories(ctx.out);
    json buckets = json::array();
    for (std::size_t b = 0; b < rows.size(); ++b) {
        write_jsonl(bucket_file(ctx.out, b), rows[b]);
        buckets.push_back({{"bucket", b}, {"label", spec.label(b)}, {"documents", rows[b].size()}, {"tokens", tokens[b]}});
    }
    return {{"documents", docs.size()}, {"buckets", std::move(buckets)}};
}

json cmd_blend(Context& ctx, const Flags& f) {
    const auto& spec_buckets = ctx.config.buckets;
    longctx::BlendSpec spec = ctx.config.blend.spec;
    spec.seed = ctx.config.seed;
    std::vector<std::vector<corpus::Document>> docs(spec_buckets.bucket_count());
    longctx::BucketPools pools(spec_buckets.bucket_count());
    for (std::size_t b = 0; b < docs.size(); ++b) {
        const fs::path file = bucket_file(f.in, b);
        if (!fs::exists(file)) continue;
        docs[b] = corpus::read_documents(file);
        for (std::size_t i = 0; i < docs[b].size(); ++i) {
            pools[b].push_back({i, docs[b][i].domain.value_or(""), require_tokens(docs[b][i])});
        }
    }
    if (ctx.config.blend.n_units == 0) throw ValidationError("blend.n_units", "must be positive");
    const auto result = in_section("blend", [&] { return longctx::blend_sample(pools, spec, ctx.config.blend.n_units); });
    std::vector<json> out;
    out.reserve(result.picks.size());
    for (const auto& p : result.picks) {
        json row = {{"bucket", p.bucket}, {"id", docs[p.bucket][p.source].id}, {"units", p.units}};
        if (p.truncated) row["truncated"] = true;
        if (p.with_replacement) row["with_replacement"] = true;
        out.push_back(std::move(row));
    }
    write_jsonl(ctx.out, out);
    return result.report.to_json();
}

json cmd_anneal_plan(Context& ctx, const Flags&) {
    const auto& a = ctx.config.anneal;
    auto plan = in_section("anneal", [&] { return longctx::anneal_plan(a.targets, a.prev_stage_steps, {a.pretrain_lr, a.warmup_frac}); });
    for (auto& stage : plan) stage.token_budget = a.token_budget;
    const json j = longctx::plan_to_json(plan);
    write_json_file(ctx.out, j);
    return {{"stages", plan.size()}};
}

// ---------------------------------------------------------------- pref

json cmd_pairs(Context& ctx, const Flags& f) {
    std::vector<pref::ResponseRecord> records;
    for (const auto& row : read_rows(f.in)) records.push_back(pref::response_from_json(row));
    const auto pairs = in_section("pairs", [&] {
        return pref::build_all_pairs(records, ctx.config.pairs_k, ctx.config.seed, ctx.threads());
    });
    std::vector<json> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(pref::pair_to_json(p));
    write_jsonl(ctx.out, out);
    json report = pref::dataset_report(pairs, ctx.config.pairs_k).to_json();
    report["responses"] = records.size();
    return report;
}

// ---------------------------------------------------------------- rl

json cmd_stratify(Context& ctx, const Flags& f) {
    std::vector<rl::RolloutRecord> all;
    for (const auto& row : read_rows(f.in)) all.push_back(rl::rollout_from_json(row));
    std::vector<rl::RolloutRecord> medium;
    std::vector<rl::RolloutRecord> hard;
    std::map<std::string, std::size_t> tier_counts{{"easy", 0}, {"medium", 0}, {"hard", 0}};
    for (const auto& r : all) {
        const auto t = rl::tier(rl::pass_rate(r));
        ++tier_counts[std::string(rl::tier_name(t))];
        if (t == rl::Tier::medium) medium.push_back(r);
        if (t == rl::Tier::hard) hard.push_back(r);
    }
    const auto set = rl::compose_rl_set(medium, hard, ctx.config.seed);
    std::vector<json> out;
    for (std::size_t i = 0; i < set.items.size(); ++i) {
        json row = rl::rollout_to_json(set.items[i]);
        row["pass_rate"] = rl::pass_rate(set.items[i]);
        row["tier"] = rl::tier_name(set.tiers[i]);
        out.push_back(std::move(row));
    }
    write_jsonl(ctx.out, out);
    return {{"input", all.size()}, {"tiers", tier_counts}, {"composed", set.report()}};
}

json cmd_reward(Context& ctx, const Flags& f) {
    std::vector<rl::ToolCallRecord> records;
    for (const auto& row : read_rows(f.in)) {
        auto rec = rl::tool_record_from_json(row);
        if (!row.contains("score_bounds")) rec.score_bounds = ctx.config.reward_score_bounds;
        records.push_back(std::move(rec));
    }
    const auto rows = rl::reward_batch(records, ctx.config.reward_bounds);
    std::vector<json> out;
    std::size_t tool = 0;
    std::size_t format_failures = 0;
    std::size_t match_failures = 0;
    double sum = 0.0;
    for (const auto& r : rows) {
        out.push_back(r.to_json());
        sum += r.reward;
        if (r.validation) {
            ++tool;
            if (!r.validation->format) {
                ++format_failures;
            } else if (!r.validation->match) {
                ++match_failures;
            }
        }
    }
    write_jsonl(ctx.out, out);
    return {{"records", rows.size()},
            {"tool_calls", tool},
            {"tool_free", rows.size() - tool},
            {"format_failures", format_failures},
            {"match_failures", match_failures},
            {"mean_reward", rows.empty() ? 0.0 : sum / static_cast<double>(rows.size())}};
}

std::string row_id(const json& row, std::size_t i) {
    if (auto it = row.find("id"); it != row.end()) return it->is_string() ? it->get<std::string>() : it->dump();
    return std::to_string(i);
}

std::string string_field(const json& row, const char* key, const std::string& file, std::size_t i) {
    auto it = row.find(key);
    if (it == row.end() || !it->is_string()) {
        throw Error("bad_row", file + ": row " + std::to_string(i + 1) + " lacks string field '" + key + "'");
    }
    return it->get<std::string>();
}

json cmd_verify_math(Context& ctx, const Flags& f) {
    const auto rows = read_rows(f.in);
    std::map<std::string, std::size_t> counts{{"correct", 0}, {"incorrect", 0}, {"no_answer", 0}};
    std::size_t unbalanced = 0;
    std::vector<json> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto check = rl::verify_boxed_answer(string_field(rows[i], "response", f.in, i),
                                                   string_field(rows[i], "reference", f.in, i));
        const std::string verdict(rl::verdict_name(check.verdict));
        ++counts[verdict];
        unbalanced += check.unbalanced ? 1 : 0;
        json row = {{"id", row_id(rows[i], i)}, {"verdict", verdict}};
        row["extracted"] = check.extracted ? json(*check.extracted) : json(nullptr);
        if (check.unbalanced) row["unbalanced"] = true;
        out.push_back(std::move(row));
    }
    write_jsonl(ctx.out, out);
    return {{"responses", rows.size()}, {"verdicts", counts}, {"unbalanced", unbalanced}};
}

json cmd_check_constraints(Context& ctx, const Flags& f) {
    const auto rows = read_rows(f.in);
    std::size_t passed = 0;
    std::vector<json> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<rl::ConstraintSpec> specs;
        auto it = rows[i].find("constraints");
        if (it == rows[i].end() || !it->is_array()) {
            throw Error("bad_row", f.in + ": row " + std::to_string(i + 1) + " lacks a constraints array");
        }
        for (const auto& c : *it) specs.push_back(rl::constraint_from_json(c));
        const auto check = rl::validate_constraints(string_field(rows[i], "response", f.in, i), specs);
        passed += check.pass ? 1 : 0;
        json row = check.to_json();
        row["id"] = row_id(rows[i], i);
        out.push_back(std::move(row));
    }
    write_jsonl(ctx.out, out);
    return {{"responses", rows.size()}, {"passed", passed}, {"failed", rows.size() - passed}};
}

json cmd_curriculum(Context& ctx, const Flags& f) {
    std::vector<rl::PromptRate> prompts;
    for (const auto& row : read_rows(f.in)) {
        if (row.contains("rate")) {
            const json& id = row.at("prompt_id");
            prompts.push_back({id.is_string() ? id.get<std::string>() : id.dump(), row.at("rate").get<double>()});
        } else {
            const auto r = rl::rollout_from_json(row);
            prompts.push_back({r.prompt_id, rl::pass_rate(r)});
        }
    }
    const auto stages = in_section("curriculum", [&] { return rl::curriculum_order(prompts, ctx.config.curriculum_stages); });
    std::vector<json> out;
    json sizes = json::array();
    for (std::size_t s = 0; s < stages.size(); ++s) {
        sizes.push_back(stages[s].size());
        for (const auto& p : stages[s]) out.push_back({{"stage", s}, {"prompt_id", p.prompt_id}, {"rate", p.rate}});
    }
    write_jsonl(ctx.out, out);
    return {{"prompts", prompts.size()}, {"stage_sizes", std::move(sizes)}};
}

// ---------------------------------------------------------------- pack

json cmd_pack(Context& ctx, const Flags& f) {
    std::vector<pack::PackSample> samples;
    for (const auto& row : read_rows(f.in)) samples.push_back(pack::sample_from_json(row));
    const pack::PackOptions opt{ctx.config.pack.max_len, ctx.config.pack.mode, ctx.config.pack.strict, ctx.threads()};
    const auto seqs = in_section("pack", [&] { return pack::pack_sequences(samples, opt); });
    std::vector<json> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) out.push_back(pack::sequence_to_json(s));
    write_jsonl(ctx.out, out);
    json report = pack::pack_report(samples, seqs).to_json();
    report["max_len"] = opt.max_len;
    report["mode"] = pack::mode_name(opt.mode);
    return report;
}

json cmd_avg_ckpt(Context& ctx, const Flags& f) {
    std::vector<pack::CheckpointTensorSet> sets;
    sets.reserve(f.inputs.size());
    for (const auto& p : f.inputs) sets.push_back(pack::read_checkpoint(p));
    const pack::AverageOptions opt{ctx.config.avg_window, ctx.threads()};
    const auto avg = in_section("avg", [&] { return pack::average_checkpoints(sets, opt); });
    pack::write_checkpoint(ctx.out, avg);
    const std::size_t used = std::min(opt.window, sets.size());
    std::vector<std::string> averaged(f.inputs.end() - static_cast<std::ptrdiff_t>(used), f.inputs.end());
    return {{"inputs", f.inputs.size()}, {"window", opt.window}, {"averaged", averaged}, {"tensors", avg.tensors.size()}};
}

// ---------------------------------------------------------------- dispatch

using Handler = std::function<json(Context&, const Flags&)>;

struct Command {
    std::string name;
    std::string description;
    Handler handler;
    std::function<void(CLI::App&, Flags&)> add_flags;
};

void add_in(CLI::App& app, Flags& f, const std::string& what) {
    app.add_option("--in", f.in, what)->required();
}

void apply_overrides(PipelineConfig& c, const std::string& name, const Flags& f) {
    if (f.dirty_words) c.dirty_words_file = f.dirty_words;
    if (f.scorer_url) {
        c.scorer.url = f.scorer_url;
        c.scorer.command.reset();
    }
    if (f.scorer_cmd) {
        c.scorer.command = f.scorer_cmd;
        if (!f.scorer_url) c.scorer.url.reset();
    }
    if (f.min_score) c.scorer.min_score = f.min_score;
    if (f.levels) {
        c.dedup.levels = {false, false, false};
        std::size_t pos = 0;
        const std::string& text = *f.levels;
        while (pos <= text.size()) {
            const std::size_t comma = std::min(text.find(',', pos), text.size());
            const std::string level = text.substr(pos, comma - pos);
            if (level == "url") {
                c.dedup.levels.url = true;
            } else if (level == "document") {
                c.dedup.levels.document = true;
            } else if (level == "paragraph") {
                c.dedup.levels.paragraph = true;
            } else if (!level.empty()) {
                throw ValidationError("dedup.levels", "unknown level '" + level + "'");
            }
            pos = comma + 1;
        }
    }
    if (f.min_paragraph_chars) c.dedup.min_paragraph_chars = *f.min_paragraph_chars;
    if (f.k) (name == "pairs" ? c.pairs_k : c.cluster.k) = *f.k;
    if (f.max_iters) c.cluster.max_iters = *f.max_iters;
    if (f.cos_threshold) c.cluster.cos_threshold = *f.cos_threshold;
    if (f.kappa) c.mix.kappa = *f.kappa;
    if (f.mu) c.mix.mu = *f.mu;
    if (f.max_rounds) c.mix.max_rounds = *f.max_rounds;
    if (f.n_units) c.blend.n_units = *f.n_units;
    if (f.ratio) c.blend.spec.short_fraction = *f.ratio;
    if (f.unit) {
        if (*f.unit == "tokens") {
            c.blend.spec.unit = longctx::BlendUnit::tokens;
        } else if (*f.unit == "samples") {
            c.blend.spec.unit = longctx::BlendUnit::samples;
        } else {
            throw ValidationError("blend.unit", "must be 'tokens' or 'samples'");
        }
    }
    for (const auto& u : f.upsample) {
        const std::size_t eq = u.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("blend.domain_upsample", "expected domain=multiplier, got '" + u + "'");
        double m = 0.0;
        const std::string v = u.substr(eq + 1);
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), m);
        if (ec != std::errc{} || p != v.data() + v.size()) {
            throw ValidationError("blend.domain_upsample", "bad multiplier in '" + u + "'");
        }
        c.blend.spec.domain_upsample[u.substr(0, eq)] = m;
    }
    if (f.targets) c.anneal.targets = parse_u64_list("anneal.targets", *f.targets);
    if (f.prev_steps) c.anneal.prev_stage_steps = parse_u64_list("anneal.prev_stage_steps", *f.prev_steps);
    if (f.pretrain_lr) c.anneal.pretrain_lr = *f.pretrain_lr;
    if (f.warmup_frac) c.anneal.warmup_frac = *f.warmup_frac;
    if (f.token_budget) c.anneal.token_budget = *f.token_budget;
    if (f.bounds_mode) {
        if (*f.bounds_mode == "fixed") {
            c.reward_bounds = rl::BoundsMode::fixed;
        } else if (*f.bounds_mode == "batch") {
            c.reward_bounds = rl::BoundsMode::batch;
        } else {
            throw ValidationError("reward.bounds_mode", "must be 'fixed' or 'batch'");
        }
    }
    if (f.stages) c.curriculum_stages = *f.stages;
    if (f.max_len) c.pack.max_len = *f.max_len;
    if (f.mode) c.pack.mode = in_section("pack", [&] { return pack::parse_mode(*f.mode); });
    if (f.lenient) c.pack.strict = false;
    if (f.window) c.avg_window = *f.window;
}

std::vector<Command> commands() {
    std::vector<Command> cmds;
    cmds.push_back({"clean", "Heuristic filtering with optional external quality scoring", cmd_clean,
                    [](CLI::App& a, Flags& f) {
                        add_in(a, f, "Documents (JSONL)");
                        a.add_option("--dirty-words", f.dirty_words, "Dirty-word list, one per line");
                        a.add_option("--scorer-url", f.scorer_url, "HTTP scorer endpoint");
                        a.add_option("--scorer-cmd", f.scorer_cmd, "Scorer subprocess command");
                        a.add_option("--min-score", f.min_score, "Drop scored documents below this score");
                    }});
    cmds.push_back({"dedup", "URL, document and paragraph de-duplication", cmd_dedup, [](CLI::App& a, Flags& f) {
                        add_in(a, f, "Documents (JSONL)");
                        a.add_option("--levels", f.levels, "Comma list of url,document,paragraph");
                        a.add_option("--min-paragraph-chars", f.min_paragraph_chars, "Shortest paragraph hashed");
                    }});
    cmds.push_back({"cluster", "k-means over embeddings plus near-duplicate grouping", cmd_cluster,
                    [](CLI::App& a, Flags& f) {
                        add_in(a, f, "Embeddings (JSONL with id and embedding)");
                        a.add_option("--k", f.k, "Cluster count");
                        a.add_option("--max-iters", f.max_iters, "Lloyd iteration cap");
                        a.add_option("--cos-threshold", f.cos_threshold, "Near-duplicate cosine threshold");
                    }});
    cmds.push_back({"mix-step", "One data-mix reweighting round", cmd_mix_step, [](CLI::App& a, Flags& f) {
                        a.add_option("--logs", f.logs, "Perplexity logs (JSONL or CSV)")->required();
                        a.add_option("--state", f.state, "Round state to resume from");
                        a.add_option("--kappa", f.kappa, "Reweighting strength");
                        a.add_option("--mu", f.mu, "Step scale");
                        a.add_option("--max-rounds", f.max_rounds, "Round cap");
                    }});
    cmds.push_back({"bucket", "Split documents into length buckets", cmd_bucket,
                    [](CLI::App& a, Flags& f) { add_in(a, f, "Documents with token_count (JSONL)"); }});
    cmds.push_back({"blend", "Sample a short/long blend from bucket pools", cmd_blend, [](CLI::App& a, Flags& f) {
                        add_in(a, f, "Directory written by `bucket`");
                        a.add_option("--n-units", f.n_units, "Blend size in the configured unit");
                        a.add_option("--ratio", f.ratio, "Short-bucket fraction");
                        a.add_option("--unit", f.unit, "tokens or samples");
                        a.add_option("--upsample", f.upsample, "domain=multiplier, repeatable");
                    }});
    cmds.push_back({"anneal-plan", "Plan long-context annealing stages", cmd_anneal_plan, [](CLI::App& a, Flags& f) {
                        a.add_option("--targets", f.targets, "Comma list of target contexts");
                        a.add_option("--prev-steps", f.prev_steps, "Comma list of stage step counts");
                        a.add_option("--pretrain-lr", f.pretrain_lr, "Learning rate of the pre-training stage");
                        a.add_option("--warmup-frac", f.warmup_frac, "Warmup fraction of each stage");
                        a.add_option("--token-budget", f.token_budget, "Tokens per stage");
                    }});
    cmds.push_back({"pairs", "Build preference pairs", cmd_pairs, [](CLI::App& a, Flags& f) {
                        add_in(a, f, "Scored responses (JSONL)");
                        a.add_option("--k", f.k, "Pairs per prompt");
                    }});
    cmds.push_back({"stratify", "Tier rollouts and compose the medium/hard set", cmd_stratify,
                    [](CLI::App& a, Flags& f) { add_in(a, f, "Rollouts (JSONL)"); }});
    cmds.push_back({"reward", "Tool-call rewards", cmd_reward, [](CLI::App& a, Flags& f) {
                        add_in(a, f, "Tool-call records (JSONL)");
                        a.add_option("--bounds-mode", f.bounds_mode, "fixed or batch");
                    }});
    cmds.push_back({"verify-math", "Check boxed answers", cmd_verify_math,
                    [](CLI::App& a, Flags& f) { add_in(a, f, "Responses with references (JSONL)"); }});
    cmds.push_back({"check-constraints", "Check verifiable instruction constraints", cmd_check_constraints,
                    [](CLI::App& a, Flags& f) { add_in(a, f, "Responses with constraints (JSONL)"); }});
    cmds.push_back({"curriculum", "Order prompts into difficulty stages", cmd_curriculum, [](CLI::App& a, Flags& f) {
                        add_in(a, f, "Rollouts or prompt rates (JSONL)");
                        a.add_option("--stages", f.stages, "Stage count");
                    }});
    cmds.push_back({"pack", "Pack samples into fixed-length sequences", cmd_pack, [](CLI::App& a, Flags& f) {
                        add_in(a, f, "Samples (JSONL)");
                        a.add_option("--max-len", f.max_len, "Sequence length");
                        a.add_option("--mode", f.mode, "pretrain or sft");
                        a.add_flag("--lenient", f.lenient, "Truncate oversized samples instead of failing");
                    }});
    cmds.push_back({"avg-ckpt", "Average checkpoints element-wise", cmd_avg_ckpt, [](CLI::App& a, Flags& f) {
                        a.add_option("--in", f.inputs, "Checkpoint files, oldest first")->required()->expected(1, -1);
                        a.add_option("--window", f.window, "Number of trailing checkpoints averaged");
                    }});
    return cmds;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& c : commands()) out.push_back(c.name);
        return out;
    }();
    return names;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, out, err);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Data curation and training-mix toolkit", "datamix"};
    app.require_subcommand(1, 1);
    app.fallthrough(false);

    const auto cmds = commands();
    CommonFlags common;
    Flags flags;
    std::map<CLI::App*, const Command*> by_app;
    for (const auto& cmd : cmds) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.description);
        sub->add_option("--config", common.config, "Pipeline configuration (JSON)");
        sub->add_option("--seed", common.seed, "Global seed");
        sub->add_option("--threads", common.threads, "Worker cap (default: hardware concurrency)");
        sub->add_option("--out", common.out, "Output path; the report goes to <out>.report.json")->required();
        cmd.add_flags(*sub, flags);
        by_app[sub] = &cmd;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    const Command* cmd = nullptr;
    for (const auto& [sub, c] : by_app) {
        if (sub->parsed()) cmd = c;
    }
    if (cmd == nullptr) {
        err << app.help();
        return kExitUsage;
    }

    try {
        PipelineConfig config = common.config ? load_config(*common.config) : PipelineConfig{};
        if (common.seed) config.seed = *common.seed;
        if (common.threads) config.threads = *common.threads;
        apply_overrides(config, cmd->name, flags);
        config.validate();

        Context ctx{std::move(config), fs::path(common.out)};
        json body = cmd->handler(ctx, flags);
        json report = {{"command", cmd->name}, {"seed", ctx.config.seed}, {"result", std::move(body)}};
        write_json_file(ctx.report_path(), report);
        out << cmd->name << ": wrote " << ctx.out.string() << " and " << ctx.report_path().string() << "\n";
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "error: invalid " << e.what() << "\n";
        return kExitInvalid;
    } catch (const Error& e) {
        err << "error [" << e.code() << "]: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

}  // namespace datamix::cli
