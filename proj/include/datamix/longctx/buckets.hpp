#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace datamix::longctx {

// Half-open length intervals [b_i, b_{i+1}); the last bucket is unbounded.
struct LengthBucketSpec {
    std::vector<std::uint64_t> boundaries{0, 8192, 16384, 32768, 131072};

    std::size_t bucket_count() const { return boundaries.size(); }

    // Raises ValidationError unless boundaries start at 0 and strictly increase.
    void validate() const;

    std::string label(std::size_t bucket) const;
};

std::size_t assign_bucket(std::uint64_t token_len, const LengthBucketSpec& spec = {});

}  // namespace datamix::longctx
