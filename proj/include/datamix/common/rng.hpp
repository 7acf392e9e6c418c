#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace datamix {

// Seeded generator with platform-independent derived distributions.
// std::uniform_*_distribution is implementation-defined, so draws go through
// the raw 64-bit engine output instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe for log().
    double uniform_open0() { return 1.0 - uniform(); }

    // Uniform integer in [0, bound) without modulo bias. bound > 0.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Derives a per-item seed so that independent groups (prompts, pools) draw
// from decorrelated streams regardless of processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

// k distinct indices from [0, n) in ascending order, uniformly at random.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace datamix
