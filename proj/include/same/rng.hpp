#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace same {

// Deterministic randomness handle. A (seed, stream id) pair always yields
// the same draw sequence, and child streams derived with derive() are
// independent of sibling streams no matter how many values each consumes.
class RngHandle {
public:
    RngHandle() : RngHandle(0, "root") {}
    RngHandle(std::uint64_t seed, std::string stream) : seed_(seed), stream_(std::move(stream)) {}

    RngHandle derive(std::string_view child) const {
        return RngHandle(seed_, stream_ + "/" + std::string(child));
    }

    std::uint64_t seed() const { return seed_; }
    const std::string& stream() const { return stream_; }

    // Engine seeded from a digest of (seed, stream id).
    std::mt19937_64 engine() const;

private:
    std::uint64_t seed_;
    std::string stream_;
};

// Draw helpers. std::uniform_*_distribution is implementation-defined,
// so every random quantity in the project goes through these.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline float uniform01f(std::mt19937_64& g) {
    return static_cast<float>(g() >> 40) * 0x1.0p-24f;
}

// Unbiased integer in [0, n) via rejection.
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return x % n;
}

// Box-Muller; consumes two draws per call.
inline double normal(std::mt19937_64& g) {
    double u1 = uniform01(g);
    double u2 = uniform01(g);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// In-place Fisher-Yates over index array semantics: permutes [0, n).
template <typename Vec>
void shuffle_indices(Vec& idx, std::mt19937_64& g) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace same
