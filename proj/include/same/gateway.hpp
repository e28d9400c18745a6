#pragma once

#include <atomic>
#include <memory>
#include <thread>

#include "same/detector.hpp"
#include "same/pow.hpp"

namespace same {

struct GatewayResponse {
    enum class Status { prediction, rejected, challenge };
    Status status = Status::prediction;
    std::vector<float> probs;  // prediction payload, bit-identical to the victim's
    std::string code;          // machine-readable rejection / error code
    double score = 0.0;
    PowChallenge challenge;    // pow payload
};

// Policy decision for one scored query. monitor always answers; reject
// answers unless the verdict is malicious; pow issues a score-scaled
// challenge through the registry.
GatewayResponse apply_policy(const AnomalyRecord& record, const std::vector<float>& victim_probs,
                             double tau, const DefensePolicy& policy, PowRegistry& registry,
                             const RngHandle& rng, const std::vector<std::uint8_t>& query_binding);

// Serving front: score -> policy -> respond. No cross-request state other
// than the single-use challenge table.
class Gateway {
public:
    Gateway(Detector detector, DefensePolicy policy, PowRegistry::Clock clock = nullptr,
            std::uint64_t pow_seed = 0);

    GatewayResponse handle(const ImageTensor& query);
    GatewayResponse redeem_pow(const std::string& challenge_id, const std::vector<std::uint8_t>& nonce);

    const Detector& detector() const { return detector_; }
    const DefensePolicy& policy() const { return policy_; }
    long queries_served() const { return queries_served_.load(); }

private:
    Detector detector_;
    DefensePolicy policy_;
    PowRegistry registry_;
    RngHandle pow_rng_;
    std::atomic<long> queries_served_{0};
};

// HTTP wrapper. POST /v1/predict, POST /v1/pow, GET /v1/health.
class HttpGateway {
public:
    HttpGateway(Detector detector, DefensePolicy policy, std::uint64_t pow_seed = 0);
    ~HttpGateway();

    // Binds and serves on a background thread. port 0 picks a free port;
    // returns the bound port.
    int start(const std::string& bind_address, int port);
    void stop();

    Gateway& core() { return gateway_; }

private:
    struct Impl;
    Gateway gateway_;
    std::unique_ptr<Impl> impl_;
    std::thread server_thread_;
};

}  // namespace same
