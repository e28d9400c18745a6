#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace same {

// Error taxonomy. Callers that care about the failure class catch the
// specific type; everything derives from Error for blanket handling.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

// Malformed file contents (bad magic, bad header fields).
struct FormatError : Error {
    using Error::Error;
};

// Structurally valid inputs that disagree with each other (count mismatch).
struct ConsistencyError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

// Bad argument / violated precondition.
struct ValueError : Error {
    using Error::Error;
};

// Model triple (victim, autoencoder, auxiliary) whose recorded hashes
// do not link up.
struct ProvenanceError : Error {
    using Error::Error;
};

// Proof-of-work challenge misuse: expired or already consumed. Distinct
// from a verification returning false.
struct PowError : Error {
    using Error::Error;
};

std::string to_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> from_hex(const std::string& hex);

// FNV-1a over arbitrary bytes; used to derive rng streams and query
// fingerprints that only need to be deterministic, not cryptographic.
std::uint64_t fnv1a64(const void* data, std::size_t len);

}  // namespace same
