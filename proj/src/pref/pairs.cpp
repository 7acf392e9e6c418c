#include "datamix/pref/pairs.hpp"

#include <algorithm>
#include <cmath>

#include "datamix/common/error.hpp"
#include "datamix/common/hash.hpp"
#include "datamix/common/parallel.hpp"
#include "datamix/common/rng.hpp"

namespace datamix::pref {

ResponseRecord response_from_json(const json& row) {
    ResponseRecord r;
    try {
        const json& pid = row.at("prompt_id");
        r.prompt_id = pid.is_string() ? pid.get<std::string>() : pid.dump();
        r.response = row.at("response").get<std::string>();
        r.source_model = row.value("source_model", std::string{});
        r.on_policy = row.value("on_policy", false);
        r.domain = row.value("domain", std::string{});
        const std::string kind = row.value("score_kind", std::string{"judge"});
        if (kind == "rule_verified") {
            r.score_kind = ScoreKind::rule_verified;
        } else if (kind != "judge") {
            throw Error("bad_response", "unknown score_kind '" + kind + "'");
        }
        if (r.score_kind == ScoreKind::rule_verified && row.contains("passed")) {
            r.score = row.at("passed").get<bool>() ? 10.0 : 0.0;
        } else {
            r.score = row.at("score").get<double>();
        }
    } catch (const json::exception& e) {
        throw Error("bad_response", std::string("response record: ") + e.what());
    }
    if (!(r.score >= 0.0 && r.score <= 10.0)) {
        throw Error("bad_response", "score " + std::to_string(r.score) + " outside [0, 10] for prompt " + r.prompt_id);
    }
    if (r.score_kind == ScoreKind::rule_verified && r.score != 0.0 && r.score != 10.0) {
        throw Error("bad_response", "rule-verified score must be 0 or 10 for prompt " + r.prompt_id);
    }
    return r;
}

std::optional<std::size_t> select_chosen(const std::vector<ResponseRecord>& candidates) {
    if (candidates.empty()) return std::nullopt;
    double best_score = candidates.front().score;
    for (const auto& c : candidates) best_score = std::max(best_score, c.score);
    if (best_score < kChosenMinScore) return std::nullopt;

    std::optional<std::size_t> best;
    Hash128 best_hash;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (c.score != best_score) continue;
        const Hash128 h = content_hash(c.response);
        if (!best) {
            best = i;
            best_hash = h;
            continue;
        }
        const auto& b = candidates[*best];
        const bool better = c.on_policy != b.on_policy
                                ? c.on_policy
                                : (c.source_model != b.source_model ? c.source_model < b.source_model : h < best_hash);
        if (better) {
            best = i;
            best_hash = h;
        }
    }
    return best;
}

std::vector<std::size_t> select_rejected(const std::vector<ResponseRecord>& candidates, std::size_t chosen) {
    std::vector<std::size_t> out;
    const double top = candidates.at(chosen).score;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i == chosen || !candidates[i].on_policy) continue;
        if (top - candidates[i].score >= kMinScoreGap) out.push_back(i);
    }
    return out;
}

std::vector<PreferencePair> build_pairs(const std::vector<ResponseRecord>& prompt_group, std::size_t k,
                                        std::uint64_t seed) {
    if (k == 0) throw ValidationError("k", "must be positive");
    std::vector<PreferencePair> pairs;
    const auto chosen = select_chosen(prompt_group);
    if (!chosen) return pairs;
    std::vector<std::size_t> rejected = select_rejected(prompt_group, *chosen);
    if (rejected.size() > k) {
        Rng rng(derive_seed(seed, prompt_group.front().prompt_id));
        std::vector<std::size_t> picked;
        for (std::size_t i : sample_without_replacement(rejected.size(), k, rng)) picked.push_back(rejected[i]);
        rejected.swap(picked);
    }
    for (std::size_t r : rejected) {
        pairs.push_back({prompt_group[*chosen].prompt_id, prompt_group[*chosen], prompt_group[r]});
    }
    return pairs;
}

std::vector<PreferencePair> build_all_pairs(const std::vector<ResponseRecord>& records, std::size_t k,
                                            std::uint64_t seed, std::size_t threads) {
    std::map<std::string, std::vector<ResponseRecord>> groups;
    for (const auto& r : records) groups[r.prompt_id].push_back(r);
    std::vector<const std::vector<ResponseRecord>*> ordered;
    ordered.reserve(groups.size());
    for (const auto& [id, g] : groups) ordered.push_back(&g);

    std::vector<std::vector<PreferencePair>> per_group(ordered.size());
    parallel_for(ordered.size(), threads, [&](std::size_t i) { per_group[i] = build_pairs(*ordered[i], k, seed); });

    std::vector<PreferencePair> out;
    for (auto& g : per_group) {
        for (auto& p : g) out.push_back(std::move(p));
    }
    return out;
}

json pair_to_json(const PreferencePair& pair) {
    return {{"prompt_id", pair.prompt_id},
            {"chosen_text", pair.chosen.response},
            {"rejected_text", pair.rejected.response},
            {"chosen_score", pair.chosen.score},
            {"rejected_score", pair.rejected.score},
            {"sources", {{"chosen", pair.chosen.source_model}, {"rejected", pair.rejected.source_model}}},
            {"chosen_on_policy", pair.chosen.on_policy},
            {"rejected_on_policy", pair.rejected.on_policy},
            {"domain", pair.chosen.domain}};
}

PreferencePair pair_from_json(const json& row) {
    try {
        PreferencePair p;
        p.prompt_id = row.at("prompt_id").get<std::string>();
        p.chosen.prompt_id = p.prompt_id;
        p.rejected.prompt_id = p.prompt_id;
        p.chosen.response = row.at("chosen_text").get<std::string>();
        p.rejected.response = row.at("rejected_text").get<std::string>();
        p.chosen.score = row.at("chosen_score").get<double>();
        p.rejected.score = row.at("rejected_score").get<double>();
        if (auto it = row.find("sources"); it != row.end() && it->is_object()) {
            p.chosen.source_model = it->value("chosen", std::string{});
            p.rejected.source_model = it->value("rejected", std::string{});
        }
        p.chosen.on_policy = row.value("chosen_on_policy", false);
        p.rejected.on_policy = row.value("rejected_on_policy", false);
        p.chosen.domain = row.value("domain", std::string{});
        p.rejected.domain = p.chosen.domain;
        return p;
    } catch (const json::exception& e) {
        throw Error("bad_pair", std::string("pair record: ") + e.what());
    }
}

json DatasetReport::to_json() const {
    json hist = json::array();
    for (const auto& [gap, count] : gap_histogram) hist.push_back({{"gap", gap}, {"count", count}});
    json viol = json::array();
    for (const auto& v : violations) viol.push_back({{"index", v.index}, {"reason", v.reason}});
    return {{"pair_count", pair_count},
            {"prompt_count", prompt_count},
            {"max_pairs_per_prompt", max_pairs_per_prompt},
            {"per_domain", per_domain},
            {"gap_histogram", std::move(hist)},
            {"violations", std::move(viol)},
            {"valid", valid}};
}

DatasetReport dataset_report(const std::vector<PreferencePair>& pairs, std::size_t k) {
    DatasetReport report;
    report.pair_count = pairs.size();
    // prompt -> (pair count, index of its first pair)
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_prompt;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        auto slot = per_prompt.try_emplace(p.prompt_id, 0, i).first;
        ++slot->second.first;
        ++report.per_domain[p.chosen.domain.empty() ? "unknown" : p.chosen.domain];
        const double gap = p.chosen.score - p.rejected.score;
        ++report.gap_histogram[gap];
        if (p.chosen.score < kChosenMinScore) report.violations.push_back({i, "chosen_below_threshold"});
        if (gap < kMinScoreGap) report.violations.push_back({i, "score_gap_below_2"});
        if (!p.rejected.on_policy) report.violations.push_back({i, "rejected_off_policy"});
        if (p.chosen.prompt_id != p.prompt_id || p.rejected.prompt_id != p.prompt_id) {
            report.violations.push_back({i, "prompt_mismatch"});
        }
    }
    report.prompt_count = per_prompt.size();
    for (const auto& [id, entry] : per_prompt) {
        const auto [n, first] = entry;
        report.max_pairs_per_prompt = std::max(report.max_pairs_per_prompt, n);
        if (k > 0 && n > k) report.violations.push_back({first, "too_many_pairs"});
    }
    report.valid = report.violations.empty();
    return report;
}

}  // namespace datamix::pref
