#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "same/rng.hpp"

namespace same {

enum class PolicyKind { reject, pow, monitor };

PolicyKind parse_policy_kind(const std::string& name);
std::string policy_kind_name(PolicyKind k);

struct DefensePolicy {
    PolicyKind kind = PolicyKind::monitor;
    int pow_base_bits = 8;
    int pow_max_bits = 20;
    double pow_slope = 4.0;  // extra difficulty bits per unit of (score - tau)
    std::int64_t pow_ttl_seconds = 120;

    void validate() const;
};

struct PowChallenge {
    std::string id;
    std::vector<std::uint8_t> prefix;  // 16 random bytes
    int difficulty_bits = 0;
    std::int64_t expiry_unix = 0;
    std::vector<std::uint8_t> query_binding;  // digest of the pending query
};

// d = clamp(base + floor(slope * max(0, score - tau)), base, max).
int pow_difficulty(double score, double tau, const DefensePolicy& policy);

// True iff sha256(prefix || nonce || query_binding) has at least
// difficulty_bits leading zero bits. Pure; no single-use bookkeeping.
bool pow_hash_ok(const PowChallenge& challenge, const std::vector<std::uint8_t>& nonce);

// Brute-force solver (test and client helper): increments a 8-byte
// little-endian counter nonce. Returns the nonce and attempt count.
std::pair<std::vector<std::uint8_t>, long> solve_pow(const PowChallenge& challenge, long max_attempts);

// Single-use challenge table. Challenges expire after the policy TTL and
// are consumed by a successful verification. Clock is injectable so tests
// can age challenges.
class PowRegistry {
public:
    using Clock = std::function<std::int64_t()>;
    PowRegistry();
    explicit PowRegistry(Clock clock);

    PowChallenge issue(double score, double tau, const DefensePolicy& policy, const RngHandle& rng,
                       std::vector<std::uint8_t> query_binding, std::vector<float> pending_probs);

    // True/false reports whether the nonce solves the puzzle; a consumed or
    // expired challenge throws PowError instead.
    bool verify(const std::string& challenge_id, const std::vector<std::uint8_t>& nonce);

    // Probabilities bound to a challenge, available only after a
    // successful verify consumed it.
    std::vector<float> take_pending(const std::string& challenge_id);

    std::size_t open_challenges() const;

private:
    struct Entry {
        PowChallenge challenge;
        std::vector<float> pending_probs;
        bool solved = false;
    };

    Clock clock_;
    mutable std::mutex mu_;
    std::map<std::string, Entry> table_;
    std::uint64_t counter_ = 0;
};

}  // namespace same
