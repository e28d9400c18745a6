#include "same/rng.hpp"

#include <cstring>

#include "same/sha256.hpp"

namespace same {

std::mt19937_64 RngHandle::engine() const {
    Sha256 h;
    std::uint8_t seed_bytes[8];
    for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<std::uint8_t>(seed_ >> (8 * i));
    h.update(seed_bytes, sizeof seed_bytes);
    h.update(stream_);
    auto d = h.digest();
    std::uint64_t s = 0;
    std::memcpy(&s, d.data(), sizeof s);
    return std::mt19937_64(s);
}

}  // namespace same
