#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace same {

// Incremental SHA-256. Self-contained so checkpoints, dataset
// fingerprints, and proof-of-work puzzles share one implementation.
class Sha256 {
public:
    Sha256();

    void update(const void* data, std::size_t len);
    void update(const std::vector<std::uint8_t>& bytes) { update(bytes.data(), bytes.size()); }
    void update(const std::string& s) { update(s.data(), s.size()); }

    // Finalizes and returns the 32-byte digest; the object must not be
    // updated afterwards.
    std::vector<std::uint8_t> digest();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
    std::uint64_t total_len_ = 0;
    bool finalized_ = false;
};

std::vector<std::uint8_t> sha256(const void* data, std::size_t len);
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_hex(const std::string& s);

}  // namespace same
