#include "datamix/longctx/blend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "datamix/common/error.hpp"
#include "datamix/common/rng.hpp"

namespace datamix::longctx {

namespace {

double multiplier_for(const BlendSpec& spec, const std::string& domain) {
    auto it = spec.domain_upsample.find(domain);
    return it == spec.domain_upsample.end() ? 1.0 : it->second;
}

// Splits `total` across `weights` proportionally; remainders go to the
// largest fractional parts, lowest index first on ties.
std::vector<std::uint64_t> largest_remainder(std::uint64_t total, const std::vector<long double>& weights) {
    std::vector<std::uint64_t> out(weights.size(), 0);
    const long double sum = std::accumulate(weights.begin(), weights.end(), 0.0L);
    if (sum <= 0 || total == 0) return out;
    std::vector<std::pair<long double, std::size_t>> rema;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const long double exact = total * (weights[i] / sum);
        out[i] = static_cast<std::uint64_t>(std::floor(exact));
        assigned += out[i];
        if (weights[i] > 0) rema.emplace_back(exact - out[i], i);
    }
    std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total && !rema.empty(); r = (r + 1) % rema.size()) {
        ++out[rema[r].second];
        ++assigned;
    }
    return out;
}

struct PoolDrawer {
    const std::vector<PoolEntry>& pool;
    std::vector<std::size_t> eligible;  // indices with tokens > 0 in token mode
    std::vector<std::size_t> order;     // weighted random permutation
    std::vector<double> cumulative;     // for draws with replacement
    std::size_t next = 0;
    Rng rng;

    PoolDrawer(const std::vector<PoolEntry>& p, std::vector<std::size_t> elig, const BlendSpec& spec,
               std::uint64_t seed)
        : pool(p), eligible(std::move(elig)), rng(seed) {
        // Efraimidis-Spirakis: sorting by log(u) / w descending yields a
        // weighted sample without replacement.
        std::vector<std::pair<double, std::size_t>> keyed;
        keyed.reserve(eligible.size());
        cumulative.reserve(eligible.size());
        double acc = 0.0;
        for (std::size_t idx : eligible) {
            const double w = multiplier_for(spec, pool[idx].domain);
            keyed.emplace_back(std::log(rng.uniform_open0()) / w, idx);
            acc += w;
            cumulative.push_back(acc);
        }
        std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        order.reserve(keyed.size());
        for (const auto& k : keyed) order.push_back(k.second);
    }

    // Returns (index, with_replacement).
    std::pair<std::size_t, bool> draw() {
        if (next < order.size()) return {order[next++], false};
        const double target = rng.uniform() * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        if (it == cumulative.end()) --it;
        return {eligible[static_cast<std::size_t>(it - cumulative.begin())], true};
    }
};

}  // namespace

void BlendSpec::validate() const {
    if (!(short_fraction >= 0.0 && short_fraction <= 1.0)) {
        throw ValidationError("short_fraction", "must lie in [0, 1]");
    }
    for (const auto& [domain, m] : domain_upsample) {
        if (!(m >= 1.0) || !std::isfinite(m)) {
            throw ValidationError("domain_upsample." + domain, "multiplier must be finite and >= 1");
        }
    }
}

json BlendReport::to_json() const {
    json buckets_json = json::array();
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        const auto& c = buckets[b];
        buckets_json.push_back({{"bucket", b},
                                {"quota", c.quota},
                                {"units", c.units},
                                {"picks", c.picks},
                                {"pool_size", c.pool_size},
                                {"exhausted", c.exhausted}});
    }
    return {{"n_units", n_units},
            {"short_quota", short_quota},
            {"buckets", std::move(buckets_json)},
            {"picks_by_domain", picks_by_domain},
            {"skipped_empty", skipped_empty}};
}

BlendResult blend_sample(const BucketPools& pools, const BlendSpec& spec, std::uint64_t n_units) {
    spec.validate();
    if (pools.size() < 2) throw ValidationError("pools", "need the short bucket and at least one long bucket");

    BlendResult result;
    BlendReport& report = result.report;
    report.n_units = n_units;
    report.buckets.resize(pools.size());

    const bool tokens = spec.unit == BlendUnit::tokens;
    std::vector<std::vector<std::size_t>> eligible(pools.size());
    std::vector<long double> sizes(pools.size(), 0.0L);
    for (std::size_t b = 0; b < pools.size(); ++b) {
        for (std::size_t i = 0; i < pools[b].size(); ++i) {
            if (tokens && pools[b][i].tokens == 0) {
                ++report.skipped_empty;
                continue;
            }
            eligible[b].push_back(i);
            sizes[b] += tokens ? static_cast<long double>(pools[b][i].tokens) : 1.0L;
        }
        report.buckets[b].pool_size = eligible[b].size();
    }
    const bool short_empty = eligible[0].empty();
    const bool long_empty = std::all_of(eligible.begin() + 1, eligible.end(), [](const auto& e) { return e.empty(); });
    if (short_empty && long_empty) throw Error("empty_pools", "short and long pools are all empty");
    if (n_units == 0) return result;

    const auto short_quota = static_cast<std::uint64_t>(std::llround(spec.short_fraction * static_cast<double>(n_units)));
    report.short_quota = short_quota;
    const std::uint64_t long_quota = n_units - short_quota;
    if (short_quota > 0 && short_empty) throw Error("empty_short_pool", "short pool is empty but has a quota");
    if (long_quota > 0 && long_empty) throw Error("empty_long_pools", "long pools are empty but have a quota");

    std::vector<std::uint64_t> quotas(pools.size(), 0);
    quotas[0] = short_quota;
    const auto long_split = largest_remainder(long_quota, std::vector<long double>(sizes.begin() + 1, sizes.end()));
    std::copy(long_split.begin(), long_split.end(), quotas.begin() + 1);

    for (std::size_t b = 0; b < pools.size(); ++b) {
        BucketComposition& comp = report.buckets[b];
        comp.quota = quotas[b];
        if (quotas[b] == 0) continue;
        PoolDrawer drawer(pools[b], eligible[b], spec, derive_seed(spec.seed, "blend-bucket-" + std::to_string(b)));
        std::uint64_t remaining = quotas[b];
        while (remaining > 0) {
            auto [idx, replaced] = drawer.draw();
            const PoolEntry& e = pools[b][idx];
            BlendPick pick{b, e.source, 1, false, replaced};
            if (tokens) {
                pick.units = std::min<std::uint64_t>(e.tokens, remaining);
                pick.truncated = pick.units < e.tokens;
            }
            remaining -= pick.units;
            comp.units += pick.units;
            ++comp.picks;
            comp.exhausted = comp.exhausted || replaced;
            ++report.picks_by_domain[e.domain];
            result.picks.push_back(pick);
        }
    }
    Rng order_rng(derive_seed(spec.seed, "blend-order"));
    order_rng.shuffle(result.picks);
    return result;
}

}  // namespace datamix::longctx
