#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "same/auxiliary.hpp"
#include "same/base64.hpp"
#include "same/common.hpp"
#include "same/gateway.hpp"
#include "same/synthetic.hpp"

using namespace same;
using nlohmann::json;

namespace {

struct Fixture {
    LabeledDataset train, heldout;
    Detector detector;

    static Detector build() {
        auto digits = render_glyph_dataset(GlyphSet::digits, 900, {1, 28, 28}, RngHandle(100, "gw-data"));
        auto parts = split_dataset(digits, {0.8, 0.2}, RngHandle(100, "gw-split"));

        TrainConfig vc;
        vc.epochs = 3;
        vc.batch_size = 64;
        vc.learning_rate = 0.1;
        vc.seed = 101;
        auto victim = train_classifier(Arch::mlp, parts[0], vc);

        MaeArchConfig arch;
        arch.patch_size = 7;
        arch.embed_dim = 32;
        arch.depth = 2;
        arch.heads = 2;
        arch.decoder_depth = 1;
        MaeTrainConfig mc;
        mc.epochs = 30;
        mc.warmup_epochs = 3;
        mc.batch_size = 64;
        mc.learning_rate = 3e-3;
        mc.seed = 102;
        auto mae = train_mae(parts[0], arch, mc);

        auto recon = build_reconstructed_dataset(mae, parts[0], RngHandle(103, "recon"));
        TrainConfig ac;
        ac.epochs = 12;
        ac.batch_size = 64;
        ac.learning_rate = 0.3;
        ac.seed = 104;
        auto aux = train_auxiliary(victim, mae, parts[0], recon, ac);

        Detector det(std::move(victim), std::move(mae), std::move(aux), DetectorConfig{});
        det.calibrate(parts[1], 0.05);
        return det;
    }

    Fixture() : detector(build()) {
        auto digits = render_glyph_dataset(GlyphSet::digits, 900, {1, 28, 28}, RngHandle(100, "gw-data"));
        auto parts = split_dataset(digits, {0.8, 0.2}, RngHandle(100, "gw-split"));
        train = std::move(parts[0]);
        heldout = std::move(parts[1]);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

ImageTensor noise_query(std::uint64_t seed) {
    auto g = RngHandle(seed, "gw-noise").engine();
    ImageTensor t({1, 28, 28});
    for (auto& v : t.pixels) v = uniform01f(g);
    return t;
}

json predict_body(const ImageTensor& t) {
    auto bytes = reinterpret_cast<const std::uint8_t*>(t.pixels.data());
    return json{{"image", base64_encode(bytes, t.pixels.size() * sizeof(float))},
                {"shape", {t.shape.channels, t.shape.height, t.shape.width}}};
}

}  // namespace

TEST_CASE("pow difficulty mapping") {
    DefensePolicy p;
    p.kind = PolicyKind::pow;
    p.pow_base_bits = 4;
    p.pow_max_bits = 12;
    p.pow_slope = 3.0;

    CHECK(pow_difficulty(0.5, 1.0, p) == 4);   // below tau: floor
    CHECK(pow_difficulty(1.0, 1.0, p) == 4);
    CHECK(pow_difficulty(2.0, 1.0, p) == 7);   // 4 + floor(3 * 1)
    CHECK(pow_difficulty(100.0, 1.0, p) == 12);  // clamped

    // Monotone non-decreasing over a grid.
    int prev = -1;
    for (int i = 0; i <= 100; ++i) {
        int d = pow_difficulty(i * 0.05, 1.0, p);
        CHECK(d >= prev);
        prev = d;
    }

    p.pow_slope = 0.0;
    for (double s : {0.0, 1.0, 7.0}) CHECK(pow_difficulty(s, 1.0, p) == 4);

    DefensePolicy bad = p;
    bad.pow_max_bits = 30;
    CHECK_THROWS_AS(bad.validate(), ValueError);
}

TEST_CASE("pow hash check and solver statistics") {
    DefensePolicy p;
    p.kind = PolicyKind::pow;
    p.pow_base_bits = 8;
    p.pow_max_bits = 8;

    PowRegistry reg;
    // d = 0: every nonce verifies.
    PowChallenge trivial;
    trivial.prefix = {1, 2, 3};
    trivial.difficulty_bits = 0;
    trivial.query_binding = {9};
    CHECK(pow_hash_ok(trivial, {0x55}));

    // Mean attempts at d=8 over 20 puzzles: expectation 256, bounds [2^7, 2^10].
    double total = 0.0;
    RngHandle rng(7, "pow-stats");
    for (int i = 0; i < 20; ++i) {
        auto c = reg.issue(0.0, 1.0, p, rng.derive(std::to_string(i)), {0xAB}, {});
        auto [nonce, attempts] = solve_pow(c, 1 << 16);
        CHECK(pow_hash_ok(c, nonce));
        // Flipping a nonce bit breaks the preimage.
        auto flipped = nonce;
        flipped[0] ^= 1;
        CHECK_FALSE(pow_hash_ok(c, flipped));
        total += static_cast<double>(attempts);
    }
    double mean = total / 20.0;
    CHECK(mean >= 128.0);
    CHECK(mean <= 1024.0);
}

TEST_CASE("pow registry single-use and expiry semantics") {
    DefensePolicy p;
    p.kind = PolicyKind::pow;
    p.pow_base_bits = 4;
    p.pow_max_bits = 8;
    p.pow_ttl_seconds = 100;

    std::int64_t fake_now = 1000;
    PowRegistry reg([&]() { return fake_now; });

    auto c = reg.issue(0.0, 1.0, p, RngHandle(8, "single"), {0x01}, {0.5f, 0.5f});
    auto [nonce, attempts] = solve_pow(c, 1 << 16);

    // Wrong nonce: false, challenge stays open.
    auto wrong = nonce;
    wrong[0] ^= 0xFF;
    if (!pow_hash_ok(c, wrong)) {
        CHECK_FALSE(reg.verify(c.id, wrong));
    }
    CHECK(reg.verify(c.id, nonce));
    auto probs = reg.take_pending(c.id);
    CHECK(probs == std::vector<float>{0.5f, 0.5f});
    // Consumed: further verification is an error, distinct from false.
    CHECK_THROWS_AS(reg.verify(c.id, nonce), PowError);

    // Expired challenge.
    auto c2 = reg.issue(0.0, 1.0, p, RngHandle(9, "expiry"), {0x02}, {});
    auto [nonce2, att2] = solve_pow(c2, 1 << 16);
    fake_now += 101;
    CHECK_THROWS_AS(reg.verify(c2.id, nonce2), PowError);
    CHECK_THROWS_AS(reg.verify("no-such-id", nonce2), PowError);
}

TEST_CASE("apply_policy decision table") {
    auto& f = fixture();
    double tau = f.detector.config().threshold;
    PowRegistry reg;
    RngHandle rng(10, "policy");

    auto clean = f.heldout.samples[0];
    auto probs = f.detector.victim().predict(clean);
    auto clean_record = f.detector.score(clean);
    REQUIRE(clean_record.score <= tau);  // calibrated so most clean pass

    DefensePolicy monitor;
    monitor.kind = PolicyKind::monitor;
    auto r1 = apply_policy(clean_record, probs, tau, monitor, reg, rng, {1});
    CHECK(r1.status == GatewayResponse::Status::prediction);
    CHECK(r1.probs == probs);  // bit-identical to the victim's output

    DefensePolicy reject;
    reject.kind = PolicyKind::reject;
    auto r2 = apply_policy(clean_record, probs, tau, reject, reg, rng, {1});
    CHECK(r2.status == GatewayResponse::Status::prediction);
    CHECK(r2.probs == probs);

    auto malicious = noise_query(1);
    auto bad_record = f.detector.score(malicious);
    REQUIRE(bad_record.score > tau);
    auto r3 = apply_policy(bad_record, f.detector.victim().predict(malicious), tau, reject, reg, rng, {2});
    CHECK(r3.status == GatewayResponse::Status::rejected);
    CHECK(r3.code == "ANOMALY_SCORE_EXCEEDED");

    // monitor always answers, even above threshold
    auto r4 = apply_policy(bad_record, f.detector.victim().predict(malicious), tau, monitor, reg, rng, {2});
    CHECK(r4.status == GatewayResponse::Status::prediction);

    DefensePolicy pow;
    pow.kind = PolicyKind::pow;
    pow.pow_base_bits = 4;
    pow.pow_max_bits = 10;
    pow.pow_slope = 2.0;
    auto r5 = apply_policy(clean_record, probs, tau, pow, reg, rng, {3});
    CHECK(r5.status == GatewayResponse::Status::challenge);
    CHECK(r5.challenge.difficulty_bits == 4);  // at or below tau: base difficulty
    auto r6 = apply_policy(bad_record, probs, tau, pow, reg, rng, {4});
    CHECK(r6.challenge.difficulty_bits >= 4);
}

TEST_CASE("gateway end-to-end over HTTP") {
    auto& f = fixture();
    DefensePolicy reject;
    reject.kind = PolicyKind::reject;
    HttpGateway server(f.detector, reject, 42);
    int port = server.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);

    SUBCASE("health") {
        auto res = client.Get("/v1/health");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(json::parse(res->body)["status"] == "ok");
    }

    SUBCASE("clean prediction is bit-identical to direct victim inference") {
        auto q = f.heldout.samples[1];
        auto res = client.Post("/v1/predict", predict_body(q).dump(), "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        auto body = json::parse(res->body);
        REQUIRE(body["status"] == "prediction");
        auto direct = f.detector.victim().predict(q);
        auto probs = body["probs"];
        REQUIRE(probs.size() == direct.size());
        for (std::size_t j = 0; j < direct.size(); ++j) {
            CHECK(probs[j].get<double>() == static_cast<double>(direct[j]));
        }
    }

    SUBCASE("noise is rejected with a machine-readable code") {
        auto res = client.Post("/v1/predict", predict_body(noise_query(5)).dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 403);
        auto body = json::parse(res->body);
        CHECK(body["status"] == "rejected");
        CHECK(body["code"] == "ANOMALY_SCORE_EXCEEDED");
        CHECK(body.contains("score"));
    }

    SUBCASE("malformed requests get 400-class errors") {
        auto res = client.Post("/v1/predict", "{not json", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);

        json body = predict_body(f.heldout.samples[0]);
        body["shape"] = {1, 14, 14};
        auto res2 = client.Post("/v1/predict", body.dump(), "application/json");
        REQUIRE(res2);
        CHECK(res2->status == 400);
        CHECK(json::parse(res2->body)["code"] == "BAD_SHAPE");

        json body3 = predict_body(f.heldout.samples[0]);
        body3["image"] = "!!!";
        auto res3 = client.Post("/v1/predict", body3.dump(), "application/json");
        REQUIRE(res3);
        CHECK(res3->status == 400);
    }

    SUBCASE("concurrent requests are independent") {
        std::atomic<int> ok{0};
        auto worker = [&](int idx) {
            httplib::Client c2("127.0.0.1", port);
            auto res = c2.Post("/v1/predict", predict_body(f.heldout.samples[idx]).dump(), "application/json");
            if (res && res->status == 200) ok.fetch_add(1);
        };
        std::thread t1(worker, 2), t2(worker, 3);
        t1.join();
        t2.join();
        CHECK(ok.load() == 2);
    }

    server.stop();
}

TEST_CASE("pow flow over HTTP") {
    auto& f = fixture();
    DefensePolicy pow;
    pow.kind = PolicyKind::pow;
    pow.pow_base_bits = 4;
    pow.pow_max_bits = 10;
    pow.pow_slope = 2.0;
    HttpGateway server(f.detector, pow, 43);
    int port = server.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);

    auto q = f.heldout.samples[4];
    auto res = client.Post("/v1/predict", predict_body(q).dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    auto body = json::parse(res->body);
    REQUIRE(body["status"] == "challenge");

    PowChallenge c;
    c.id = body["challenge_id"];
    c.prefix = from_hex(body["prefix"]);
    c.difficulty_bits = body["bits"];
    c.query_binding = from_hex(body["binding"]);
    auto [nonce, attempts] = solve_pow(c, 1 << 20);

    json redeem{{"challenge_id", c.id}, {"nonce", to_hex(nonce)}};
    auto res2 = client.Post("/v1/pow", redeem.dump(), "application/json");
    REQUIRE(res2);
    REQUIRE(res2->status == 200);
    auto body2 = json::parse(res2->body);
    REQUIRE(body2["status"] == "prediction");
    auto direct = f.detector.victim().predict(q);
    for (std::size_t j = 0; j < direct.size(); ++j) {
        CHECK(body2["probs"][j].get<double>() == static_cast<double>(direct[j]));
    }

    // Re-redeeming the consumed challenge fails distinctly.
    auto res3 = client.Post("/v1/pow", redeem.dump(), "application/json");
    REQUIRE(res3);
    CHECK(res3->status == 403);
    CHECK(json::parse(res3->body)["code"] == "POW_EXPIRED_OR_CONSUMED");

    server.stop();
}
