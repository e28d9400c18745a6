#include "same/gateway.hpp"

#include <chrono>
#include <cstring>

#include <httplib.h>
#include <json.hpp>

#include "same/base64.hpp"
#include "same/common.hpp"
#include "same/sha256.hpp"

namespace same {

using nlohmann::json;

GatewayResponse apply_policy(const AnomalyRecord& record, const std::vector<float>& victim_probs,
                             double tau, const DefensePolicy& policy, PowRegistry& registry,
                             const RngHandle& rng, const std::vector<std::uint8_t>& query_binding) {
    policy.validate();
    GatewayResponse resp;
    resp.score = record.score;
    switch (policy.kind) {
        case PolicyKind::monitor:
            resp.status = GatewayResponse::Status::prediction;
            resp.probs = victim_probs;
            return resp;
        case PolicyKind::reject:
            if (classify_query(record, tau) == Verdict::malicious) {
                resp.status = GatewayResponse::Status::rejected;
                resp.code = "ANOMALY_SCORE_EXCEEDED";
            } else {
                resp.status = GatewayResponse::Status::prediction;
                resp.probs = victim_probs;
            }
            return resp;
        case PolicyKind::pow:
            resp.status = GatewayResponse::Status::challenge;
            resp.challenge = registry.issue(record.score, tau, policy, rng, query_binding, victim_probs);
            return resp;
    }
    throw ValueError("apply_policy: unknown policy kind");
}

Gateway::Gateway(Detector detector, DefensePolicy policy, PowRegistry::Clock clock, std::uint64_t pow_seed)
    : detector_(std::move(detector)), policy_(policy),
      registry_(clock ? PowRegistry(std::move(clock)) : PowRegistry()), pow_rng_(pow_seed, "gateway-pow") {
    policy_.validate();
    if (!detector_.config().calibrated) {
        throw ValueError("Gateway: detector must be calibrated before serving");
    }
}

GatewayResponse Gateway::handle(const ImageTensor& query) {
    AnomalyRecord record = detector_.score(query);
    record.unix_millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
    std::vector<float> probs = detector_.victim().predict(query);
    std::vector<std::uint8_t> binding =
        sha256(query.pixels.data(), query.pixels.size() * sizeof(float));
    queries_served_.fetch_add(1);
    return apply_policy(record, probs, detector_.config().threshold, policy_, registry_,
                        pow_rng_.derive(std::to_string(record.query_fingerprint)), binding);
}

GatewayResponse Gateway::redeem_pow(const std::string& challenge_id, const std::vector<std::uint8_t>& nonce) {
    GatewayResponse resp;
    if (!registry_.verify(challenge_id, nonce)) {
        resp.status = GatewayResponse::Status::rejected;
        resp.code = "POW_VERIFICATION_FAILED";
        return resp;
    }
    resp.status = GatewayResponse::Status::prediction;
    resp.probs = registry_.take_pending(challenge_id);
    return resp;
}

// ---------------------------------------------------------------------------
// HTTP front
// ---------------------------------------------------------------------------

struct HttpGateway::Impl {
    httplib::Server server;
    Shape input_shape;
};

namespace {

json error_body(const std::string& code, const std::string& detail) {
    return json{{"status", "error"}, {"code", code}, {"detail", detail}};
}

ImageTensor parse_query(const json& body, Shape expected) {
    if (!body.contains("image") || !body.contains("shape")) {
        throw FormatError("body needs 'image' and 'shape'");
    }
    auto shape_arr = body.at("shape");
    if (!shape_arr.is_array() || shape_arr.size() != 3) throw FormatError("'shape' must be [c,h,w]");
    Shape s{shape_arr.at(0).get<int>(), shape_arr.at(1).get<int>(), shape_arr.at(2).get<int>()};
    if (!(s == expected)) {
        throw ShapeError("expected shape " + expected.str() + ", got " + s.str());
    }
    auto bytes = base64_decode(body.at("image").get<std::string>());
    if (bytes.size() != static_cast<std::size_t>(s.pixel_count()) * sizeof(float)) {
        throw FormatError("image payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(s.pixel_count() * sizeof(float)));
    }
    ImageTensor t(s);
    std::memcpy(t.pixels.data(), bytes.data(), bytes.size());
    t.validate();  // finite, in [0,1]
    return t;
}

json response_body(const GatewayResponse& r) {
    switch (r.status) {
        case GatewayResponse::Status::prediction: {
            json probs = json::array();
            for (float v : r.probs) probs.push_back(static_cast<double>(v));
            return json{{"status", "prediction"}, {"probs", probs}};
        }
        case GatewayResponse::Status::rejected:
            return json{{"status", "rejected"}, {"code", r.code}, {"score", r.score}};
        case GatewayResponse::Status::challenge:
            return json{{"status", "challenge"},
                        {"challenge_id", r.challenge.id},
                        {"prefix", to_hex(r.challenge.prefix)},
                        {"bits", r.challenge.difficulty_bits},
                        {"expiry", r.challenge.expiry_unix},
                        {"binding", to_hex(r.challenge.query_binding)}};
    }
    return error_body("INTERNAL", "unreachable");
}

}  // namespace

HttpGateway::HttpGateway(Detector detector, DefensePolicy policy, std::uint64_t pow_seed)
    : gateway_(std::move(detector), policy, nullptr, pow_seed), impl_(std::make_unique<Impl>()) {
    impl_->input_shape = gateway_.detector().victim().input_shape();

    impl_->server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"status", "ok"}}.dump(), "application/json");
    });

    impl_->server.Post("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(error_body("BAD_JSON", e.what()).dump(), "application/json");
            return;
        }
        try {
            ImageTensor query = parse_query(body, impl_->input_shape);
            GatewayResponse r = gateway_.handle(query);
            res.status = r.status == GatewayResponse::Status::rejected ? 403 : 200;
            res.set_content(response_body(r).dump(), "application/json");
        } catch (const ShapeError& e) {
            res.status = 400;
            res.set_content(error_body("BAD_SHAPE", e.what()).dump(), "application/json");
        } catch (const Error& e) {
            res.status = 400;
            res.set_content(error_body("BAD_REQUEST", e.what()).dump(), "application/json");
        }
    });

    impl_->server.Post("/v1/pow", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(error_body("BAD_JSON", e.what()).dump(), "application/json");
            return;
        }
        try {
            if (!body.contains("challenge_id") || !body.contains("nonce")) {
                throw FormatError("body needs 'challenge_id' and 'nonce'");
            }
            auto nonce = from_hex(body.at("nonce").get<std::string>());
            GatewayResponse r = gateway_.redeem_pow(body.at("challenge_id").get<std::string>(), nonce);
            res.status = r.status == GatewayResponse::Status::rejected ? 403 : 200;
            res.set_content(response_body(r).dump(), "application/json");
        } catch (const PowError& e) {
            res.status = 403;
            res.set_content(error_body("POW_EXPIRED_OR_CONSUMED", e.what()).dump(), "application/json");
        } catch (const Error& e) {
            res.status = 400;
            res.set_content(error_body("BAD_REQUEST", e.what()).dump(), "application/json");
        }
    });
}

HttpGateway::~HttpGateway() { stop(); }

int HttpGateway::start(const std::string& bind_address, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(bind_address);
        if (bound <= 0) throw IoError("HttpGateway: cannot bind to " + bind_address);
    } else {
        if (!impl_->server.bind_to_port(bind_address, port)) {
            throw IoError("HttpGateway: cannot bind " + bind_address + ":" + std::to_string(port));
        }
    }
    server_thread_ = std::thread([this]() { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpGateway::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
    if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace same
