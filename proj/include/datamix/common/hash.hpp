#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <string_view>

namespace datamix {

// 128-bit content digest: BLAKE2b with a 16-byte output length.
struct Hash128 {
    std::array<std::uint8_t, 16> bytes{};

    friend bool operator==(const Hash128&, const Hash128&) = default;
    friend auto operator<=>(const Hash128&, const Hash128&) = default;

    std::string hex() const;
};

Hash128 content_hash(std::string_view data);

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const noexcept {
        std::size_t v;
        std::memcpy(&v, h.bytes.data(), sizeof(v));
        return v;
    }
};

}  // namespace datamix
