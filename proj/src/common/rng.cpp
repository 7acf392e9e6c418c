#include "datamix/common/rng.hpp"

#include <algorithm>
#include <limits>

#include "datamix/common/hash.hpp"

namespace datamix {

std::uint64_t Rng::below(std::uint64_t bound) {
    // Lemire-style rejection on the low range.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
    std::string buf(sizeof(seed), '\0');
    for (std::size_t i = 0; i < sizeof(seed); ++i) {
        buf[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
    }
    buf.append(key);
    const Hash128 h = content_hash(buf);
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < 8; ++i) out |= std::uint64_t{h.bytes[i]} << (8 * i);
    return out;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    k = std::min(k, n);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // Partial Fisher-Yates: the first k slots become the sample.
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace datamix
