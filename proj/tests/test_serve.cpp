#include "support/fixtures.hpp"

#include "zoo/compose.hpp"
#include "zoo/error.hpp"
#include "zoo/serve.hpp"
#include "zoo/store.hpp"
#include "zoo/weights.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <thread>

namespace fs = std::filesystem;
using namespace zoo;
using json = nlohmann::json;

namespace {

struct Running {
    std::shared_ptr<const ServiceRuntime> runtime;
    std::unique_ptr<serve::InferenceServer> server;
    int port = 0;

    Running(const ServiceManifest& m, const LocalStore& store, std::optional<fs::path> dir = std::nullopt,
            bool always_profile = false) {
        runtime = std::make_shared<const ServiceRuntime>(m, store, dir);
        server = std::make_unique<serve::InferenceServer>(
            std::make_shared<const serve::InferenceService>(runtime, always_profile));
        port = server->start("127.0.0.1", 0);
    }

    httplib::Result post(const std::string& body, const std::string& query = "") const {
        httplib::Client c("127.0.0.1", port);
        return c.Post("/v1/infer" + query, body, "application/json");
    }
};

json error_of(const httplib::Result& r) { return json::parse(r->body).at("error"); }

}  // namespace

TEST_CASE("health and manifest endpoints") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    const auto m = fixture::lenet_service(tmp / "lenet");
    Running s(m, store, tmp / "lenet");
    httplib::Client c("127.0.0.1", s.port);
    auto h = c.Get("/healthz");
    REQUIRE(h);
    CHECK(h->status == 200);
    CHECK(h->body == "ok");
    auto man = c.Get("/v1/manifest");
    REQUIRE(man);
    CHECK(man->status == 200);
    const auto file = read_file(tmp / "lenet" / "manifest.json");
    CHECK(man->body == std::string(file.begin(), file.end()));
}

TEST_CASE("HTTP inference is bit-equal to in-process execution for LeNet-5") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    const auto m = fixture::lenet_service(tmp / "lenet");
    Running s(m, store, tmp / "lenet");
    XorShift64Star rng(42);
    const Tensor x = fixture::random_tensor({2, 1, 32, 32}, rng, 0.0f, 1.0f);
    const auto local = s.runtime->run({x}).outputs;

    const auto body = serve::encode_infer_request({{"image", x}});
    auto r1 = s.post(body);
    auto r2 = s.post(body);
    REQUIRE(r1);
    REQUIRE(r1->status == 200);
    const auto resp = serve::decode_infer_response(r1->body);
    REQUIRE(resp.outputs.size() == 1);
    CHECK(resp.outputs[0].name == "probs");
    CHECK(resp.outputs[0].tensor.bit_equal(local[0]));
    CHECK(resp.latency_us > 0.0);
    CHECK(resp.profile.empty());
    CHECK(json::parse(r1->body).at("outputs") == json::parse(r2->body).at("outputs"));
}

TEST_CASE("profile=1 returns one row per node") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    const auto m = fixture::lenet_service(tmp / "lenet");
    Running s(m, store, tmp / "lenet");
    XorShift64Star rng(1);
    const auto body = serve::encode_infer_request({{"image", fixture::random_tensor({1, 1, 32, 32}, rng)}});
    auto r = s.post(body, "?profile=1");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    const auto resp = serve::decode_infer_response(r->body);
    CHECK(resp.profile.size() == s.runtime->graph()->node_count());
    CHECK(resp.profile.size() == 8);
    CHECK(resp.profile.front().op == OpKind::Input);
    const auto plain = serve::decode_infer_response(s.post(body)->body);
    CHECK(plain.outputs[0].tensor.bit_equal(resp.outputs[0].tensor));

    Running always(m, store, tmp / "lenet", true);
    CHECK(serve::decode_infer_response(always.post(body)->body).profile.size() == 8);
}

TEST_CASE("concurrent identical requests return identical payloads") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    const auto m = fixture::lenet_service(tmp / "lenet");
    Running s(m, store, tmp / "lenet");
    XorShift64Star rng(3);
    const auto body = serve::encode_infer_request({{"image", fixture::random_tensor({3, 1, 32, 32}, rng)}});
    std::vector<std::string> outs(6);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < outs.size(); ++i)
        threads.emplace_back([&, i] {
            auto r = s.post(body);
            if (r && r->status == 200) outs[i] = json::parse(r->body).at("outputs").dump();
        });
    for (auto& t : threads) t.join();
    for (const auto& o : outs) {
        CHECK_FALSE(o.empty());
        CHECK(o == outs[0]);
    }
}

TEST_CASE("HTTP inference through a two-stage pipeline") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    XorShift64Star rng(12);
    const auto a = fixture::random_leaf(rng, "stage-a", {-1, 1, 6, 6});
    const auto b = fixture::random_leaf_with_input(rng, "stage-b", a.manifest.outputs.ports[0].shape,
                                                   a.manifest.outputs.ports[0].shape, "any");
    const auto ma = fixture::install(store, a), mb = fixture::install(store, b);
    const auto pipe = compose_sequential("two-stage", {ma, mb});
    Running s(pipe, store);

    const Tensor x = fixture::random_tensor({2, 1, 6, 6}, rng);
    const auto staged = run_service(mb, run_service(ma, {x}, store).outputs, store).outputs;
    auto r = s.post(serve::encode_infer_request({{"in", x}}), "?profile=1");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    const auto resp = serve::decode_infer_response(r->body);
    CHECK(resp.outputs[0].tensor.bit_equal(staged[0]));
    CHECK(resp.profile.empty());  // per-node rows are for leaf services only
}

TEST_CASE("malformed bodies are 400 with a field path") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    const auto m = fixture::lenet_service(tmp / "lenet");
    Running s(m, store, tmp / "lenet");
    XorShift64Star rng(4);
    const json good = json::parse(serve::encode_infer_request({{"image", fixture::random_tensor({1, 1, 32, 32}, rng)}}));

    auto expect = [&](const std::string& body, const std::string& path) {
        CAPTURE(body.substr(0, 80));
        auto r = s.post(body);
        REQUIRE(r);
        CHECK(r->status == 400);
        CHECK(error_of(r).at("path") == path);
        CHECK_FALSE(error_of(r).at("message").get<std::string>().empty());
    };
    expect("not json", "");
    expect("{}", "inputs");
    expect("{\"inputs\": 3}", "inputs");
    json j = good;
    j["inputs"][0]["data"] = "!!!";
    expect(j.dump(), "inputs[0].data");
    j = good;
    j["inputs"][0]["data"] = "AAAA";
    expect(j.dump(), "inputs[0].data");
    j = good;
    j["inputs"][0]["shape"] = json::array({1, 0, 32, 32});
    expect(j.dump(), "inputs[0].shape[1]");
    j = good;
    j["inputs"][0]["dtype"] = "q8";
    expect(j.dump(), "inputs[0].dtype");
    j = good;
    j["inputs"][0].erase("name");
    expect(j.dump(), "inputs[0].name");
}

TEST_CASE("signature violations are 422 naming port and dim") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    const auto m = fixture::lenet_service(tmp / "lenet");
    Running s(m, store, tmp / "lenet");
    XorShift64Star rng(5);

    auto r = s.post(serve::encode_infer_request({{"image", fixture::random_tensor({1, 32, 32}, rng)}}));
    REQUIRE(r);
    CHECK(r->status == 422);
    auto msg = error_of(r).at("message").get<std::string>();
    CHECK(msg.find("'image'") != std::string::npos);
    CHECK(msg.find("expected rank 4") != std::string::npos);

    r = s.post(serve::encode_infer_request({{"image", fixture::random_tensor({1, 1, 28, 28}, rng)}}));
    CHECK(r->status == 422);
    CHECK(error_of(r).at("path") == "inputs[0].shape[2]");

    r = s.post(serve::encode_infer_request({{"pixels", fixture::random_tensor({1, 1, 32, 32}, rng)}}));
    CHECK(r->status == 422);
    CHECK(error_of(r).at("message").get<std::string>().find("pixels") != std::string::npos);

    const auto t = fixture::random_tensor({1, 1, 32, 32}, rng);
    r = s.post(serve::encode_infer_request({{"image", t}, {"image", t}}));
    CHECK(r->status == 422);

    r = s.post("{\"inputs\": []}");
    CHECK(r->status == 422);

    json f64 = json::parse(serve::encode_infer_request({{"image", t}}));
    f64["inputs"][0]["dtype"] = "f64";
    f64["inputs"][0]["shape"] = json::array({1, 1, 32, 16});
    r = s.post(f64.dump());
    CHECK(r->status == 422);
    CHECK(error_of(r).at("path") == "inputs[0].dtype");
}

TEST_CASE("in-process handler mirrors HTTP statuses") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    const auto m = fixture::lenet_service(tmp / "lenet");
    const serve::InferenceService svc(std::make_shared<const ServiceRuntime>(m, store, tmp / "lenet"));
    CHECK(svc.handle_infer("[", false).status == 400);
    CHECK(svc.manifest_text() == serialize_manifest(m));
}

TEST_CASE("busy port is a startup error") {
    fixture::TempDir tmp;
    const LocalStore store(tmp / "store");
    const auto m = fixture::lenet_service(tmp / "lenet");
    Running first(m, store, tmp / "lenet");
    auto svc = std::make_shared<const serve::InferenceService>(first.runtime);
    serve::InferenceServer second(svc);
    CHECK_THROWS_AS(second.start("127.0.0.1", first.port), StartupError);
}
