#include "datamix/longctx/buckets.hpp"

#include <algorithm>

#include "datamix/common/error.hpp"

namespace datamix::longctx {

void LengthBucketSpec::validate() const {
    if (boundaries.empty() || boundaries.front() != 0) {
        throw ValidationError("boundaries", "must start at 0");
    }
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
        if (boundaries[i] <= boundaries[i - 1]) throw ValidationError("boundaries", "must strictly increase");
    }
}

std::string LengthBucketSpec::label(std::size_t bucket) const {
    auto fmt = [](std::uint64_t v) {
        if (v != 0 && v % 1024 == 0) return std::to_string(v / 1024) + "K";
        return std::to_string(v);
    };
    if (bucket + 1 >= boundaries.size()) return fmt(boundaries.back()) + "+";
    return fmt(boundaries[bucket]) + "-" + fmt(boundaries[bucket + 1]);
}

std::size_t assign_bucket(std::uint64_t token_len, const LengthBucketSpec& spec) {
    // Last boundary <= token_len.
    auto it = std::upper_bound(spec.boundaries.begin(), spec.boundaries.end(), token_len);
    return static_cast<std::size_t>(std::distance(spec.boundaries.begin(), it)) - 1;
}

}  // namespace datamix::longctx
