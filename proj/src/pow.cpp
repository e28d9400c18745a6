#include "same/pow.hpp"

#include <chrono>
#include <cmath>

#include "same/common.hpp"
#include "same/sha256.hpp"

namespace same {

PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "reject") return PolicyKind::reject;
    if (name == "pow") return PolicyKind::pow;
    if (name == "monitor") return PolicyKind::monitor;
    throw ValueError("unknown defense policy: " + name);
}

std::string policy_kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::reject: return "reject";
        case PolicyKind::pow: return "pow";
        case PolicyKind::monitor: return "monitor";
    }
    return "?";
}

void DefensePolicy::validate() const {
    if (pow_base_bits < 0 || pow_max_bits > 24 || pow_base_bits > pow_max_bits) {
        throw ValueError("DefensePolicy: need 0 <= base bits <= max bits <= 24");
    }
    if (pow_slope < 0.0) throw ValueError("DefensePolicy: slope must be non-negative");
    if (pow_ttl_seconds <= 0) throw ValueError("DefensePolicy: ttl must be positive");
}

int pow_difficulty(double score, double tau, const DefensePolicy& policy) {
    policy.validate();
    double over = std::max(0.0, score - tau);
    long d = policy.pow_base_bits + static_cast<long>(std::floor(policy.pow_slope * over));
    return static_cast<int>(std::clamp<long>(d, policy.pow_base_bits, policy.pow_max_bits));
}

static int leading_zero_bits(const std::vector<std::uint8_t>& digest) {
    int bits = 0;
    for (std::uint8_t byte : digest) {
        if (byte == 0) {
            bits += 8;
            continue;
        }
        for (int b = 7; b >= 0; --b) {
            if (byte & (1u << b)) return bits;
            ++bits;
        }
    }
    return bits;
}

bool pow_hash_ok(const PowChallenge& challenge, const std::vector<std::uint8_t>& nonce) {
    Sha256 h;
    h.update(challenge.prefix);
    h.update(nonce);
    h.update(challenge.query_binding);
    return leading_zero_bits(h.digest()) >= challenge.difficulty_bits;
}

std::pair<std::vector<std::uint8_t>, long> solve_pow(const PowChallenge& challenge, long max_attempts) {
    std::vector<std::uint8_t> nonce(8, 0);
    for (long attempt = 1; attempt <= max_attempts; ++attempt) {
        std::uint64_t v = static_cast<std::uint64_t>(attempt);
        for (int i = 0; i < 8; ++i) nonce[i] = static_cast<std::uint8_t>(v >> (8 * i));
        if (pow_hash_ok(challenge, nonce)) return {nonce, attempt};
    }
    throw Error("solve_pow: no solution within " + std::to_string(max_attempts) + " attempts");
}

static std::int64_t system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

PowRegistry::PowRegistry() : clock_(system_now) {}
PowRegistry::PowRegistry(Clock clock) : clock_(std::move(clock)) {}

PowChallenge PowRegistry::issue(double score, double tau, const DefensePolicy& policy, const RngHandle& rng,
                                std::vector<std::uint8_t> query_binding, std::vector<float> pending_probs) {
    if (policy.kind != PolicyKind::pow) throw ValueError("PowRegistry::issue: policy is not proof-of-work");
    policy.validate();

    std::lock_guard<std::mutex> lock(mu_);
    PowChallenge c;
    auto g = rng.derive("challenge/" + std::to_string(counter_)).engine();
    c.prefix.resize(16);
    for (auto& b : c.prefix) b = static_cast<std::uint8_t>(uniform_below(g, 256));
    c.id = to_hex(c.prefix) + "-" + std::to_string(counter_++);
    c.difficulty_bits = pow_difficulty(score, tau, policy);
    c.expiry_unix = clock_() + policy.pow_ttl_seconds;
    c.query_binding = std::move(query_binding);

    table_[c.id] = Entry{c, std::move(pending_probs), false};
    return c;
}

bool PowRegistry::verify(const std::string& challenge_id, const std::vector<std::uint8_t>& nonce) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = table_.find(challenge_id);
    if (it == table_.end()) throw PowError("pow: unknown or already consumed challenge");
    if (it->second.solved) throw PowError("pow: challenge already consumed");
    if (clock_() > it->second.challenge.expiry_unix) {
        table_.erase(it);
        throw PowError("pow: challenge expired");
    }
    if (!pow_hash_ok(it->second.challenge, nonce)) return false;
    it->second.solved = true;
    return true;
}

std::vector<float> PowRegistry::take_pending(const std::string& challenge_id) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = table_.find(challenge_id);
    if (it == table_.end()) throw PowError("pow: unknown challenge");
    if (!it->second.solved) throw PowError("pow: challenge not solved yet");
    auto probs = std::move(it->second.pending_probs);
    table_.erase(it);
    return probs;
}

std::size_t PowRegistry::open_challenges() const {
    std::lock_guard<std::mutex> lock(mu_);
    return table_.size();
}

}  // namespace same
