#include "datamix/common/hash.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace datamix {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    });
}

}  // namespace

Hash128 content_hash(std::string_view data) {
    ensure_sodium();
    Hash128 h;
    crypto_generichash(h.bytes.data(), h.bytes.size(),
                       reinterpret_cast<const unsigned char*>(data.data()), data.size(), nullptr, 0);
    return h;
}

std::string Hash128::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

}  // namespace datamix
