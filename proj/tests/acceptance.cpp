// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "datamix/common/error.hpp"
#include "datamix/corpus/dedup.hpp"
#include "datamix/corpus/kmeans.hpp"
#include "datamix/longctx/anneal.hpp"
#include "datamix/longctx/blend.hpp"
#include "datamix/mix/mixer.hpp"
#include "datamix/mix/spline.hpp"
#include "datamix/pack/checkpoint.hpp"
#include "datamix/pack/packing.hpp"
#include "datamix/pref/pairs.hpp"
#include "datamix/rl/stratify.hpp"
#include "datamix/rl/tool_reward.hpp"

using namespace datamix;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && pass) {
            pass = false;
            detail = what;
        }
    }
};

struct Criterion {
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

mix::MixState state_with(std::map<std::string, double> r, std::map<std::string, double> s, double sbar) {
    mix::MixState st;
    st.proportions = std::move(r);
    for (auto [id, v] : s) st.minima[id] = {v, 1.0};
    st.average_minimum = mix::CurveMinimum{sbar, 1.0};
    return st;
}

Outcome mix_update_arithmetic() {
    Outcome o;
    const auto fixed = mix::update_proportions(state_with({{"a", 0.3}, {"b", 0.7}}, {{"a", 9000}, {"b", 9000}}, 9000));
    o.require(fixed.normalized.at("a") == 0.3 && fixed.normalized.at("b") == 0.7, "fixed point moved");

    const auto one = mix::update_proportions(state_with({{"a", 0.2}, {"b", 0.8}}, {{"a", 25000}, {"b", 10000}}, 10000));
    o.require(rel_err(one.unnormalized.at("a"), 2.0) <= 1e-12, "0.2 offset +mu: " + fmt(one.unnormalized.at("a")));

    const auto sym = mix::update_proportions(state_with({{"a", 0.5}, {"b", 0.5}}, {{"a", 30000}, {"b", 0}}, 15000));
    o.require(rel_err(sym.unnormalized.at("a"), 5.0) <= 1e-12, "pre-norm 5.0");
    o.require(rel_err(sym.unnormalized.at("b"), 0.05) <= 1e-12, "pre-norm 0.05");
    o.require(rel_err(sym.normalized.at("a"), 100.0 / 101.0) <= 1e-12, "normalized 100/101");
    o.require(rel_err(sym.normalized.at("b"), 1.0 / 101.0) <= 1e-12, "normalized 1/101");

    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> ur(0.001, 1.0);
    std::uniform_real_distribution<double> us(0.0, 100000.0);
    double worst = 0.0;
    for (int c = 0; c < 1000; ++c) {
        std::map<std::string, double> r;
        std::map<std::string, double> s;
        double total = 0;
        const int n = 1 + c % 12;
        for (int i = 0; i < n; ++i) {
            const std::string id = "s" + std::to_string(i);
            r[id] = ur(g);
            total += r[id];
            s[id] = us(g);
        }
        for (auto& [k, v] : r) v /= total;
        const auto u = mix::update_proportions(state_with(r, s, us(g)));
        double sum = 0;
        for (const auto& [k, v] : u.normalized) sum += v;
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    o.require(worst <= 1e-9, "normalized sum off by " + fmt(worst));
    if (o.pass) o.detail = "examples within 1e-12; max |sum-1| = " + fmt(worst) + " over 1000 cases";
    return o;
}

Outcome spline_oracle() {
    Outcome o;
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_s = 0;
    double worst_p = 0;
    for (int c = 0; c < 200; ++c) {
        // Smooth curve with one dominant basin plus a gentle ripple.
        const double width = 1000.0 + 50000.0 * u(g);
        const double center = width * (0.1 + 0.8 * u(g));
        const double depth = 0.5 + 5 * u(g);
        const double floor = 1.5 + 10 * u(g);
        const double ripple = 0.02 * depth * u(g);
        const double freq = 1 + 3 * u(g);
        auto curve = [&](double s) {
            const double x = (s - center) / width;
            return floor + depth * 4 * x * x + ripple * std::sin(freq * 6.283185307179586 * s / width);
        };
        const int knots = 6 + static_cast<int>(g() % 15);
        std::vector<mix::Knot> k;
        for (int i = 0; i < knots; ++i) {
            const double s = width * i / (knots - 1);
            k.push_back({s, curve(s)});
        }
        const auto spline = mix::CubicSpline::fit(k);
        const auto m = spline.minimum();
        double gs = 0;
        double gp = INFINITY;
        for (int i = 0; i <= 100000; ++i) {
            const double s = width * i / 100000.0;
            const double p = spline.evaluate(s);
            if (p < gp) {
                gp = p;
                gs = s;
            }
        }
        worst_s = std::max(worst_s, std::abs(m.step - gs) / width);
        worst_p = std::max(worst_p, std::abs(m.perplexity - gp) / gp);
    }
    o.require(worst_s <= 1e-3, "step error " + fmt(worst_s) + " x width");
    o.require(worst_p <= 1e-6, "perplexity error " + fmt(worst_p) + " x p");
    if (o.pass) o.detail = "max |ds|/width = " + fmt(worst_s) + ", max |dp|/p = " + fmt(worst_p);
    return o;
}

Outcome mix_direction() {
    Outcome o;
    // A declines steadily (minimum at 60000); the token-weighted average of A
    // and B is exactly k^2 + 500 with k = (s - 45000) / 1000, minimum 45000.
    std::vector<mix::PerplexityObservation> logs;
    for (std::uint64_t s = 30000; s <= 60000; s += 1000) {
        const double k = (static_cast<double>(s) - 45000.0) / 1000.0;
        const double a = 400.0 - (static_cast<double>(s) - 30000.0) / 1000.0;
        const double avg = k * k + 500.0;
        logs.push_back({"A", s, a, 1000});
        logs.push_back({"B", s, 2 * avg - a, 1000});
    }
    mix::MixState st;
    st.proportions = {{"A", 0.5}, {"B", 0.5}};
    const auto r = mix::mix_iterate(logs, st);
    double growth = 0;
    double sa = 0;
    for (const auto& sub : r.report.subsets) {
        if (sub.subset_id == "A") {
            growth = sub.unnormalized / sub.old_proportion;
            sa = sub.minimum.step;
        }
    }
    const double sbar = r.report.average_minimum.step;
    o.require(sa == 60000.0, "A minimum at " + fmt(sa));
    o.require(std::abs(sa - sbar - 15000.0) <= 1e-6, "offset " + fmt(sa - sbar));
    o.require(std::abs(growth - 10.0) <= 1e-9, "growth factor " + fmt(growth));
    if (o.pass) o.detail = "s_A - s_bar = " + fmt(sa - sbar) + ", factor - 10 = " + fmt(growth - 10.0);
    return o;
}

Outcome reward_truth_table() {
    Outcome o;
    rl::ToolCallRecord rec;
    rec.score_bounds = {1.0, 9.0};
    int rows = 0;
    for (int i_tool = 0; i_tool < 2; ++i_tool) {
        for (int fmt_ok = 0; fmt_ok < 2; ++fmt_ok) {
            for (int match = 0; match < 2; ++match) {
                for (double s : {1.0, 5.0, 9.0}) {
                    rec.requires_tool = i_tool == 1;
                    rec.judge_score = s;
                    rl::ToolValidation v;
                    v.format = fmt_ok == 1;
                    v.match = match == 1;
                    const double want = i_tool ? (fmt_ok && match ? 1.0 : -1.0) : 2 * (s - 1.0) / 8.0 - 1;
                    const double got = rl::tool_reward(rec, v);
                    o.require(got == want, "row " + std::to_string(rows) + " gave " + fmt(got));
                    o.require(got >= -1.0 && got <= 1.0, "reward out of range");
                    ++rows;
                }
            }
        }
    }
    if (o.pass) o.detail = std::to_string(rows) + " rows match";
    return o;
}

Outcome tier_brute_force() {
    Outcome o;
    // Hand table: index = number of passes among five attempts.
    const rl::Tier by_passes[6] = {rl::Tier::hard,   rl::Tier::medium, rl::Tier::medium,
                                   rl::Tier::medium, rl::Tier::medium, rl::Tier::easy};
    for (unsigned mask = 0; mask < 32; ++mask) {
        rl::RolloutRecord r{"p", {}, "math"};
        int passes = 0;
        for (int b = 0; b < 5; ++b) {
            const bool ok = ((mask >> b) & 1U) != 0;
            r.attempts.push_back(ok);
            passes += ok;
        }
        o.require(rl::tier(rl::pass_rate(r)) == by_passes[passes], "pattern " + std::to_string(mask));
    }
    if (o.pass) o.detail = "32 patterns match";
    return o;
}

Outcome pair_invariants() {
    Outcome o;
    std::mt19937_64 g(5);
    std::vector<pref::ResponseRecord> all;
    for (int p = 0; p < 10000; ++p) {
        const int n = 1 + static_cast<int>(g() % 12);
        for (int i = 0; i < n; ++i) {
            pref::ResponseRecord r;
            r.prompt_id = "p" + std::to_string(p);
            r.response = "r" + std::to_string(i) + "-" + std::to_string(g() % 1000);
            r.source_model = "m" + std::to_string(g() % 3);
            r.on_policy = g() % 3 != 0;
            r.score = static_cast<double>(g() % 21) / 2.0;
            r.domain = g() % 2 ? "math" : "chat";
            all.push_back(std::move(r));
        }
    }
    const auto a = pref::build_all_pairs(all, 4, 77, 4);
    const auto b = pref::build_all_pairs(all, 4, 77, 4);
    std::map<std::string, std::size_t> per_prompt;
    for (const auto& p : a) {
        o.require(p.chosen.score >= 8.0, "chosen below 8");
        o.require(p.chosen.score - p.rejected.score >= 2.0, "gap below 2");
        o.require(p.rejected.on_policy, "off-policy rejected");
        ++per_prompt[p.prompt_id];
    }
    for (const auto& [id, n] : per_prompt) o.require(n <= 4, "more than 4 pairs for " + id);
    o.require(a.size() == b.size(), "double run sizes differ");
    for (std::size_t i = 0; o.pass && i < a.size(); ++i) {
        o.require(pref::pair_to_json(a[i]).dump() == pref::pair_to_json(b[i]).dump(), "double run differs");
    }
    o.require(pref::dataset_report(a, 4).valid, "report flags violations");
    if (o.pass) o.detail = std::to_string(a.size()) + " pairs over 10000 prompts, identical double run";
    return o;
}

Outcome blend_ratio() {
    Outcome o;
    longctx::BucketPools pools(5);
    std::size_t src = 0;
    for (int i = 0; i < 200000; ++i) pools[0].push_back({src++, i % 2 ? "web" : "exams", 1});
    for (int i = 0; i < 80000; ++i) pools[1 + i % 4].push_back({src++, "web", 1});
    longctx::BlendSpec spec;
    spec.unit = longctx::BlendUnit::samples;
    spec.seed = 2025;
    const auto r = longctx::blend_sample(pools, spec, 100000);
    std::size_t short_picks = 0;
    for (const auto& p : r.picks) short_picks += p.bucket == 0;
    o.require(r.picks.size() == 100000, "pick count");
    o.require(short_picks == 70000, "B0 picks " + std::to_string(short_picks));

    // Upsampling: equal exam/web pools, exam weight 2, analytic share 2/3.
    longctx::BucketPools big(5);
    src = 0;
    big[0].reserve(2000000);
    for (int i = 0; i < 2000000; ++i) big[0].push_back({src++, i % 2 ? "web" : "exams", 1});
    big[1].push_back({src++, "web", 1});
    spec.domain_upsample["exams"] = 2.0;
    const auto u = longctx::blend_sample(big, spec, 100000);
    std::size_t exams = 0;
    std::size_t in_b0 = 0;
    for (const auto& p : u.picks) {
        if (p.bucket != 0) continue;
        ++in_b0;
        exams += p.source % 2 == 0;
    }
    const double share = static_cast<double>(exams) / static_cast<double>(in_b0);
    const double err = std::abs(share - 2.0 / 3.0) / (2.0 / 3.0);
    o.require(err <= 0.01, "exam share " + fmt(share));
    if (o.pass) o.detail = "B0 share 0.70 exact; exam share " + fmt(share) + " (rel err " + fmt(err) + ")";
    return o;
}

Outcome anneal_exactness() {
    Outcome o;
    o.require(longctx::rope_base_for(32768) == 1e6, "32K base");
    o.require(longctx::rope_base_for(131072) == 8e6, "128K base");
    o.require(longctx::rope_base_for(262144) == 4e7, "256K base");
    longctx::LrConfig lr;
    lr.pretrain_lr = 1.5e-4;
    for (std::uint64_t steps : {3ULL, 9000ULL, 9001ULL, 9002ULL, 123457ULL}) {
        const auto plan = longctx::anneal_plan({32768, 131072}, {steps}, lr);
        o.require(*plan[1].resume_step == steps / 3, "resume step for " + std::to_string(steps));
        o.require(plan[0].initial_lr == lr.pretrain_lr, "first stage LR");
    }
    for (double peak : {1.0, 3e-4, 1.5e-4, 7.7e-5}) {
        for (std::int64_t total : {1000, 9000, 123457}) {
            o.require(longctx::cosine_lr(total, total, peak, 0.001) == 0.1 * peak, "cosine end " + fmt(peak));
        }
    }
    if (o.pass) o.detail = "bases bit-exact, floor(steps/3), cosine end = 0.1 peak";
    return o;
}

std::string para_text(std::mt19937_64& g, const std::string& tag) {
    static const char* words[] = {"river", "stone", "cloud", "market", "signal", "garden", "engine", "lantern",
                                  "harbor", "orbit", "meadow", "circuit", "timber", "quartz", "violet", "canyon"};
    std::string s = tag;
    for (int i = 0; i < 12; ++i) {
        s += ' ';
        s += words[g() % 16];
    }
    return s + ".";
}

Outcome dedup_and_packing() {
    Outcome o;
    std::mt19937_64 g(11);
    std::vector<corpus::Document> docs;
    std::set<std::string> originals;
    std::vector<std::size_t> original_at;
    std::vector<std::string> shared_paras;
    std::vector<std::pair<std::string, std::string>> planted_paragraphs;  // (doc id, duplicated paragraph)
    const std::size_t n = 100000;
    while (docs.size() < n) {
        const std::size_t i = docs.size();
        const std::string id = "d" + std::to_string(i);
        const auto kind = originals.empty() ? 9 : g() % 10;
        if (kind == 0) {
            // Exact copy with whitespace noise.
            auto d = docs[original_at[g() % original_at.size()]];
            d.id = id;
            d.text = "\n " + d.text + "  ";
            d.url.reset();
            docs.push_back(std::move(d));
        } else if (kind == 1) {
            // Same page under tracking parameters and host case.
            const auto& base = docs[original_at[g() % original_at.size()]];
            if (!base.url) continue;
            corpus::Document d{id, para_text(g, "fresh-" + id), *base.url + "&utm_campaign=x", {}, {}, {}};
            if (auto at = d.url->find("://site"); at != std::string::npos) d.url->replace(at + 3, 4, "SITE");
            docs.push_back(std::move(d));
        } else if (kind == 2 && !shared_paras.empty()) {
            // Unique document reusing an earlier paragraph.
            const std::string dup = shared_paras[g() % shared_paras.size()];
            corpus::Document d{id, para_text(g, "own-" + id) + "\n\n" + dup, {}, {}, {}, {}};
            planted_paragraphs.emplace_back(id, dup);
            originals.insert(id);
            original_at.push_back(i);
            docs.push_back(std::move(d));
        } else {
            const std::string p1 = para_text(g, "u" + id + "a");
            const std::string p2 = para_text(g, "u" + id + "b");
            if (g() % 4 == 0) shared_paras.push_back(p2);
            corpus::Document d{id, p1 + "\n\n" + p2, "https://site.org/page/" + id + "?ref=1", {}, {}, {}};
            originals.insert(id);
            original_at.push_back(i);
            docs.push_back(std::move(d));
        }
    }
    const auto once = corpus::dedup_stream(docs);
    const auto twice = corpus::dedup_stream(once.kept);
    o.require(twice.kept == once.kept, "dedup not idempotent");
    std::set<std::string> kept_ids;
    for (const auto& d : once.kept) kept_ids.insert(d.id);
    o.require(kept_ids == originals, "kept " + std::to_string(kept_ids.size()) + " vs " +
                                         std::to_string(originals.size()) + " originals");
    std::map<std::string, const corpus::Document*> by_id;
    for (const auto& d : once.kept) by_id[d.id] = &d;
    for (const auto& [id, para] : planted_paragraphs) {
        auto it = by_id.find(id);
        o.require(it != by_id.end() && it->second->text.find(para) == std::string::npos,
                  "planted paragraph survives in " + id);
    }

    std::size_t sequences = 0;
    for (int set = 0; set < 10000; ++set) {
        const std::uint64_t max_len = 128 + g() % 8192;
        std::vector<pack::PackSample> samples;
        std::uint64_t in = 0;
        const std::size_t count = 1 + g() % 40;
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint64_t len = 1 + g() % max_len;
            samples.push_back({"s" + std::to_string(i), len, "src" + std::to_string(g() % 3), {}});
            in += len;
        }
        pack::PackOptions opt;
        opt.max_len = max_len;
        opt.mode = set % 2 ? pack::PackMode::sft_pack : pack::PackMode::pretrain_concat;
        const auto seqs = pack::pack_sequences(samples, opt);
        std::uint64_t out = 0;
        for (const auto& s : seqs) {
            std::uint64_t used = 0;
            for (const auto& seg : s.segments) used += seg.token_length;
            o.require(used <= max_len, "sequence exceeds max_len");
            out += used;
        }
        o.require(in == out, "token count changed in set " + std::to_string(set));
        sequences += seqs.size();
    }
    if (o.pass) {
        o.detail = std::to_string(once.kept.size()) + "/" + std::to_string(n) + " docs kept, " +
                   std::to_string(planted_paragraphs.size()) + " planted paragraphs removed; " +
                   std::to_string(sequences) + " sequences conserve tokens";
    }
    return o;
}

Outcome checkpoint_averaging() {
    Outcome o;
    pack::CheckpointTensorSet a;
    pack::CheckpointTensorSet b;
    a.tensors["w"] = pack::Tensor::of_f64({2}, {1, 3});
    b.tensors["w"] = pack::Tensor::of_f64({2}, {3, 5});
    o.require(pack::average_checkpoints({a, b}).tensors.at("w").f64 == std::vector<double>{2, 4}, "[1,3]+[3,5]");

    std::mt19937_64 g(9);
    std::uniform_real_distribution<float> u(-10.0F, 10.0F);
    std::vector<float> vals(1 << 16);
    for (auto& v : vals) v = u(g);
    pack::CheckpointTensorSet c;
    c.tensors["emb"] = pack::Tensor::of_f32({256, 256}, vals);
    c.tensors["bias"] = pack::Tensor::of_f64({3}, {0.1, -2.5e-300, 7e300});
    const auto avg = pack::average_checkpoints(std::vector<pack::CheckpointTensorSet>(5, c));
    std::uint32_t worst_ulp = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const auto x = std::bit_cast<std::int32_t>(avg.tensors.at("emb").f32[i]);
        const auto y = std::bit_cast<std::int32_t>(vals[i]);
        worst_ulp = std::max(worst_ulp, static_cast<std::uint32_t>(std::abs(x - y)));
    }
    o.require(worst_ulp <= 1, "identity off by " + std::to_string(worst_ulp) + " ulp");
    o.require(avg.tensors.at("bias").f64 == c.tensors.at("bias").f64, "f64 identity");

    const std::string bytes = pack::serialize_checkpoint(c);
    o.require(pack::serialize_checkpoint(pack::parse_checkpoint(bytes)) == bytes, "container round trip");
    const auto back = pack::parse_checkpoint(bytes);
    o.require(std::equal(vals.begin(), vals.end(), back.tensors.at("emb").f32.begin(),
                         [](float x, float y) { return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y); }),
              "round trip values");
    if (o.pass) o.detail = "exact mean, identity within " + std::to_string(worst_ulp) + " ulp, bit-exact container";
    return o;
}

Outcome kmeans_properties() {
    Outcome o;
    std::mt19937_64 g(13);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::size_t converged = 0;
    for (int ds = 0; ds < 100; ++ds) {
        const std::size_t n = 50 + g() % 400;
        const std::size_t dim = 1 + g() % 16;
        const std::size_t k = 1 + g() % 10;
        std::vector<double> data(n * dim);
        for (std::size_t i = 0; i < n; ++i) {
            const double offset = 5.0 * static_cast<double>(i % k);
            for (std::size_t j = 0; j < dim; ++j) data[i * dim + j] = offset * (j % 2 ? 1 : -1) + nd(g);
        }
        const corpus::Matrix m(n, dim, std::move(data));
        const auto r = corpus::kmeans_cluster(m, {k, static_cast<std::uint64_t>(ds), 300});
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
            o.require(r.inertia_history[i] <= r.inertia_history[i - 1], "inertia rose in dataset " + std::to_string(ds));
        }
        if (!r.converged) continue;
        ++converged;
        for (std::size_t i = 0; i < n; ++i) {
            const auto assigned = r.assignments[i];
            o.require(corpus::nearest_centroid(m.row(i), r.centroids) == assigned, "assignment not nearest");
            // Scalar oracle: no centroid strictly closer than the assigned one.
            auto dist = [&](std::size_t c) {
                double d = 0;
                for (std::size_t j = 0; j < dim; ++j) d += (m.row(i)[j] - r.centroids.row(c)[j]) * (m.row(i)[j] - r.centroids.row(c)[j]);
                return d;
            };
            const double da = dist(assigned);
            for (std::size_t c = 0; c < r.k; ++c) {
                o.require(dist(c) >= da * (1 - 1e-12), "closer centroid in dataset " + std::to_string(ds));
            }
        }
    }
    o.require(converged >= 90, "only " + std::to_string(converged) + " datasets converged");
    if (o.pass) o.detail = "100 datasets, " + std::to_string(converged) + " converged, assignments nearest";
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"mix update arithmetic", 1, mix_update_arithmetic},
        {"spline oracle equivalence", 10, spline_oracle},
        {"mix iteration direction", 1, mix_direction},
        {"reward truth table", 1, reward_truth_table},
        {"tier brute force", 1, tier_brute_force},
        {"pair invariants", 30, pair_invariants},
        {"blend ratio", 30, blend_ratio},
        {"anneal plan exactness", 1, anneal_exactness},
        {"dedup idempotence and packing conservation", 60, dedup_and_packing},
        {"checkpoint averaging", 5, checkpoint_averaging},
        {"k-means", 30, kmeans_properties},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.pass && secs > c.budget_s) {
            o.pass = false;
            o.detail = "over budget: " + fmt(secs) + " s > " + fmt(c.budget_s) + " s";
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s  %-44s %8.3f s  %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), secs, o.detail.c_str());
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
