#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::longctx {

enum class BlendUnit { samples, tokens };

struct BlendSpec {
    double short_fraction = 0.7;
    std::map<std::string, double> domain_upsample;
    std::uint64_t seed = 0;
    BlendUnit unit = BlendUnit::tokens;

    void validate() const;
};

// Lightweight pool entry; `source` indexes the caller's document storage.
struct PoolEntry {
    std::size_t source = 0;
    std::string domain;
    std::uint64_t tokens = 0;
};

// Pools indexed by length bucket; bucket 0 is the short pool.
using BucketPools = std::vector<std::vector<PoolEntry>>;

struct BlendPick {
    std::size_t bucket;
    std::size_t source;
    // Units contributed: 1 in sample mode, tokens in token mode. The last
    // pick of a bucket in token mode may be cut to fill the quota exactly.
    std::uint64_t units;
    bool truncated = false;
    bool with_replacement = false;
};

struct BucketComposition {
    std::uint64_t quota = 0;
    std::uint64_t units = 0;
    std::size_t picks = 0;
    std::size_t pool_size = 0;
    bool exhausted = false;  // draws continued with replacement
};

struct BlendReport {
    std::uint64_t n_units = 0;
    std::uint64_t short_quota = 0;
    std::vector<BucketComposition> buckets;
    std::map<std::string, std::size_t> picks_by_domain;
    // Zero-token entries skipped in token mode.
    std::size_t skipped_empty = 0;

    json to_json() const;
};

struct BlendResult {
    std::vector<BlendPick> picks;  // deterministic output order
    BlendReport report;
};

// Allocates round(short_fraction * n_units) units to bucket 0 and the rest to
// the long buckets in proportion to their pool sizes (in the configured
// unit, largest-remainder rounding). Within a pool, entries are drawn with
// weight equal to their domain multiplier, without replacement until the
// pool runs dry and with replacement afterwards (flagged in the report).
//
// Errors: "empty_pools" when the short pool and all long pools are empty;
// "empty_short_pool" / "empty_long_pools" when a non-zero quota targets an
// empty side.
BlendResult blend_sample(const BucketPools& pools, const BlendSpec& spec, std::uint64_t n_units);

}  // namespace datamix::longctx
