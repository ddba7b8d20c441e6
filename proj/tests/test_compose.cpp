#include "support/cases.hpp"
#include "support/fixtures.hpp"

#include "zoo/compose.hpp"
#include "zoo/error.hpp"
#include "zoo/hashing.hpp"
#include "zoo/manifest.hpp"
#include "zoo/signature.hpp"
#include "zoo/store.hpp"
#include "zoo/weights.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace zoo;

namespace {

Port port(std::string name, Shape shape, std::string tag = "any", DType dt = DType::F32) {
    return Port{std::move(name), dt, std::move(shape), std::move(tag)};
}

TypeSignature sig(std::vector<Port> ports) { return TypeSignature{std::move(ports)}; }

ServiceManifest leaf_manifest(std::string name, TypeSignature in, TypeSignature out) {
    ServiceManifest m;
    m.name = std::move(name);
    m.version = {1, 2, 3};
    m.authors = {"ada", "lin"};
    m.inputs = std::move(in);
    m.outputs = std::move(out);
    m.leaf = LeafArtifacts{"graph.json", "weights.zoow", std::string(64, 'a')};
    m.created = "2024-01-01T00:00:00Z";
    return m;
}

}  // namespace

TEST_CASE("signature validation") {
    CHECK_NOTHROW(validate_signature(sig({port("x", {-1, 3})})));
    CHECK_THROWS_AS(validate_signature(sig({})), ValidationError);
    CHECK_THROWS_AS(validate_signature(sig({port("x", {0})})), ValidationError);
    CHECK_THROWS_AS(validate_signature(sig({port("x", {-2})})), ValidationError);
    CHECK_THROWS_AS(validate_signature(sig({port("x", {1, 1, 1, 1, 1})})), ValidationError);
    CHECK_THROWS_AS(validate_signature(sig({port("x", {1}), port("x", {1})})), ValidationError);
    CHECK_THROWS_AS(validate_signature(sig({port("", {1})})), ValidationError);
}

TEST_CASE("compatibility examples") {
    CHECK(check_compat(sig({port("o", {-1, 10}, "probs")}), sig({port("i", {-1, 10}, "probs")})).compatible);
    CHECK(check_compat(sig({port("o", {1, 10}, "probs")}), sig({port("i", {-1, -1}, "any")})).compatible);

    const auto tag = check_compat(sig({port("o", {-1, 10}, "probs")}), sig({port("i", {-1, 10}, "image")}));
    CHECK_FALSE(tag.compatible);
    REQUIRE(tag.diagnostics.size() == 1);
    CHECK(tag.diagnostics[0].port == 0);
    CHECK(tag.diagnostics[0].field == "tag");

    const auto dim = check_compat(sig({port("o", {-1, 10})}), sig({port("i", {-1, 12})}));
    REQUIRE_FALSE(dim.compatible);
    CHECK(dim.diagnostics[0].field == "dim[1]");
    CHECK(dim.summary().find("port 0 dim[1]") != std::string::npos);

    const auto rank = check_compat(sig({port("o", {-1, 10})}), sig({port("i", {-1, 10, 1})}));
    CHECK(rank.diagnostics.at(0).field == "rank");
    const auto dt = check_compat(sig({port("o", {1}, "any", DType::F64)}), sig({port("i", {1})}));
    CHECK(dt.diagnostics.at(0).field == "dtype");
    const auto count = check_compat(sig({port("o", {1})}), sig({port("i", {1}), port("j", {1})}));
    CHECK(count.diagnostics.at(0).field == "count");
}

TEST_CASE("compatibility verdicts equal the brute-force oracle on the enumerated domain") {
    CHECK(cases::one_port_domain().size() == 72);
    CHECK(cases::two_port_domain().size() == 144);
    const auto t = cases::compat_sweep();
    CHECK(t.checked == 72 * 72 + 144 * 144 + 2 * 72 * 144);
    CHECK(t.agree == t.checked);
}

TEST_CASE("compatibility is symmetric in its verdict and reflexive") {
    for (const auto& a : cases::one_port_domain()) {
        CHECK(check_compat(a, a).compatible);
        for (const auto& b : cases::one_port_domain())
            CHECK(check_compat(a, b).compatible == check_compat(b, a).compatible);
    }
}

TEST_CASE("check_conforms names port and dim") {
    const auto s = sig({port("img", {-1, 3, 4})});
    CHECK_NOTHROW(check_conforms(s, {Tensor({5, 3, 4}, std::vector<float>(60))}));
    try {
        check_conforms(s, {Tensor({1, 3, 5}, std::vector<float>(15))});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("img") != std::string::npos);
        CHECK(msg.find("dim 2") != std::string::npos);
    }
    CHECK_THROWS_AS(check_conforms(s, {Tensor({3, 4}, std::vector<float>(12))}), ValidationError);
    CHECK_THROWS_AS(check_conforms(s, {}), ValidationError);
}

TEST_CASE("semantic versions") {
    CHECK(SemVer::parse("1.2.3").str() == "1.2.3");
    CHECK(SemVer::parse("1.10.0") > SemVer::parse("1.9.9"));
    CHECK(SemVer::parse("2.0.0") > SemVer::parse("1.99.99"));
    for (const char* bad : {"1.2", "1.2.3.4", "v1.2.3", "1.2.x", "", "01.2.3x", "-1.0.0"})
        CHECK_THROWS_AS(SemVer::parse(bad), ParseError);
    const auto r = ServiceRef::parse("lenet5@1.0.0");
    CHECK(r.name == "lenet5");
    CHECK(r.str() == "lenet5@1.0.0");
    CHECK_THROWS_AS(ServiceRef::parse("lenet5"), ParseError);
    CHECK_THROWS_AS(ServiceRef::parse("Bad Name@1.0.0"), ParseError);
    CHECK(valid_service_name("a-b_c.d1"));
    CHECK_FALSE(valid_service_name(".hidden"));
    CHECK_FALSE(valid_service_name("UPPER"));
    CHECK_FALSE(valid_service_name("a/b"));
}

TEST_CASE("manifest serialization is canonical and round trips") {
    const auto m = leaf_manifest("svc", sig({port("in", {-1, 4}, "feat")}), sig({port("out", {-1, 2})}));
    const std::string text = serialize_manifest(m);
    CHECK(text.back() == '\n');
    CHECK(text.find("\"name\"") < text.find("\"version\""));
    CHECK(text.find("\"outputs\"") < text.find("\"graph\""));
    CHECK(text.find("\"sha256\"") < text.find("\"created\""));
    CHECK(text.find("pipeline") == std::string::npos);
    const auto back = parse_manifest(text);
    CHECK(back == m);
    CHECK(serialize_manifest(back) == text);

    ServiceManifest p = m;
    p.leaf.reset();
    p.pipeline = std::vector<ServiceRef>{ServiceRef::parse("a@1.0.0"), ServiceRef::parse("b@2.0.0")};
    const auto ptext = serialize_manifest(p);
    CHECK(ptext.find("\"graph\"") == std::string::npos);
    CHECK(parse_manifest(ptext) == p);
    CHECK(parse_manifest(ptext).is_composite());
}

TEST_CASE("manifest parse errors carry field paths") {
    const auto good = serialize_manifest(
        leaf_manifest("svc", sig({port("in", {-1, 4})}), sig({port("out", {-1, 2})})));
    auto expect_path = [](const std::string& text, const std::string& path) {
        try {
            parse_manifest(text);
            FAIL("expected ParseError for " << path);
        } catch (const ParseError& e) {
            CHECK(e.path() == path);
        }
    };
    auto replaced = [&](const std::string& from, const std::string& to) {
        std::string t = good;
        const auto pos = t.find(from);
        REQUIRE(pos != std::string::npos);
        t.replace(pos, from.size(), to);
        return t;
    };
    expect_path(replaced("\"f32\"", "\"i8\""), "inputs[0].dtype");
    expect_path(replaced("\"1.2.3\"", "\"1.2\""), "version");
    expect_path(replaced("\"name\": \"svc\"", "\"name\": \"Svc!\""), "name");
    expect_path(replaced("\"name\": \"svc\",", "\"name\": \"svc\", \"extra\": 1,"), "extra");
    expect_path(replaced("\"graph.json\"", "\"../graph.json\""), "graph");
    expect_path(replaced(std::string(64, 'a'), "abc"), "sha256");
    expect_path(replaced("\"created\"", "\"made\""), "made");
    CHECK_THROWS_AS(parse_manifest("[1,2"), ParseError);
}

TEST_CASE("hashing and base64 known vectors") {
    const std::string abc = "abc";
    CHECK(sha256_hex({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()}) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const std::pair<std::string, std::string> vectors[] = {
        {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
        {"foobar", "Zm9vYmFy"}};
    for (const auto& [plain, enc] : vectors) {
        const std::vector<std::uint8_t> bytes(plain.begin(), plain.end());
        CHECK(base64_encode(bytes) == enc);
        CHECK(base64_decode(enc) == bytes);
    }
    CHECK_THROWS_AS(base64_decode("Zm9v!"), ParseError);
    CHECK_THROWS_AS(base64_decode("Zm9"), ParseError);
}

TEST_CASE("compose_sequential builds a pipeline manifest") {
    const auto a = leaf_manifest("a", sig({port("x", {-1, 4}, "raw")}), sig({port("y", {-1, 3}, "feat")}));
    auto b = leaf_manifest("b", sig({port("y", {-1, -1}, "feat")}), sig({port("z", {-1, 2}, "probs")}));
    b.authors = {"lin", "kim"};
    const auto c = compose_sequential("ab", {a, b}, "2024-01-01T00:00:00Z");
    CHECK(c.version.str() == "0.1.0");
    CHECK(c.inputs == a.inputs);
    CHECK(c.outputs == b.outputs);
    CHECK(c.authors == std::vector<std::string>{"ada", "lin", "kim"});
    REQUIRE(c.pipeline);
    CHECK(c.pipeline->at(1).str() == "b@1.2.3");
    CHECK_FALSE(c.leaf);

    CHECK_THROWS_AS(compose_sequential("solo", {a}), ValidationError);
    CHECK_THROWS_AS(compose_sequential("Bad Name", {a, b}), ValidationError);
    const auto bad = leaf_manifest("bad", sig({port("y", {-1, 3}, "image")}), sig({port("z", {1})}));
    try {
        compose_sequential("x", {a, b, bad});
        FAIL("expected CompositionError");
    } catch (const CompositionError& e) {
        CHECK(e.stage() == 1);
        CHECK(e.producer() == "b@1.2.3");
        CHECK(e.consumer() == "bad@1.2.3");
        CHECK_FALSE(e.report().compatible);
    }
}

TEST_CASE("composition executes like sequential application") {
    fixture::TempDir tmp;
    const LocalStore store(tmp.path());
    XorShift64Star rng(2024);
    for (int i = 0; i < 25; ++i) CHECK(cases::compose_pair(rng, store, std::to_string(i)));
}

TEST_CASE("wildcard output into a concrete input passes the check but fails at its stage") {
    // The positional check treats -1 as unifiable with anything, so a
    // producer that may emit any batch is accepted by a consumer pinned to
    // batch 2. The mismatch can only surface at run time.
    fixture::TempDir tmp;
    const LocalStore store(tmp.path());
    XorShift64Star rng(5);
    const auto a = fixture::random_leaf(rng, "wide", {-1, 4});
    Shape concrete = a.manifest.outputs.ports[0].shape;
    Shape pinned = concrete;
    pinned[0] = 2;
    auto b = fixture::random_leaf_with_input(rng, "pinned", concrete, pinned, "any");
    const auto ma = fixture::install(store, a), mb = fixture::install(store, b);
    REQUIRE(check_compat(ma.outputs, mb.inputs).compatible);
    const auto c = compose_sequential("wp", {ma, mb});

    CHECK_NOTHROW(run_service(c, {fixture::random_tensor({2, 4}, rng)}, store));
    try {
        run_service(c, {fixture::random_tensor({1, 4}, rng)}, store);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == 1);
        CHECK(std::string(e.what()).find("pinned@1.0.0") != std::string::npos);
    }
}

TEST_CASE("nested pipelines and profiles") {
    fixture::TempDir tmp;
    const LocalStore store(tmp.path());
    XorShift64Star rng(77);
    const auto a = fixture::random_leaf(rng, "n1", {-1, 3});
    const auto b = fixture::random_leaf_with_input(rng, "n2", a.manifest.outputs.ports[0].shape,
                                                   a.manifest.outputs.ports[0].shape, "any");
    const auto c = fixture::random_leaf_with_input(rng, "n3", b.manifest.outputs.ports[0].shape,
                                                   b.manifest.outputs.ports[0].shape, "any");
    const auto ma = fixture::install(store, a), mb = fixture::install(store, b), mc = fixture::install(store, c);
    const auto ab = compose_sequential("ab", {ma, mb});
    write_manifest(store.service_dir(ab.ref()), ab);
    const auto abc = compose_sequential("abc", {ab, mc});
    const auto flat = compose_sequential("flat", {ma, mb, mc});

    const std::vector<Tensor> x{fixture::random_tensor({2, 3}, rng)};
    const auto nested = run_service(abc, x, store, true);
    const auto direct = run_service(flat, x, store, true);
    CHECK(fixture::bit_equal(nested.outputs, direct.outputs));
    REQUIRE(nested.profile);
    CHECK(nested.profile->records.size() == a.graph.node_count() + b.graph.node_count() + c.graph.node_count());
    CHECK(nested.profile->node_sum_ns() <= nested.profile->total_ns);
}

TEST_CASE("runtime errors: missing members, bad hashes, pipeline cycles") {
    fixture::TempDir tmp;
    const LocalStore store(tmp.path());
    XorShift64Star rng(8);
    const auto a = fixture::random_leaf(rng, "ca", {-1, 3});
    const auto ma = fixture::install(store, a);

    ServiceManifest ghost = ma;
    ghost.name = "ghost";
    ghost.inputs = ma.outputs;
    const auto missing = compose_sequential("m", {ma, ghost});
    CHECK_THROWS_AS(ServiceRuntime(missing, store), MissingServiceError);

    // Two pipelines naming each other.
    ServiceManifest p1;
    p1.name = "p1";
    p1.version = {1, 0, 0};
    p1.inputs = ma.inputs;
    p1.outputs = ma.outputs;
    p1.created = reproducible_timestamp();
    ServiceManifest p2 = p1;
    p2.name = "p2";
    p1.pipeline = std::vector<ServiceRef>{ma.ref(), p2.ref()};
    p2.pipeline = std::vector<ServiceRef>{ma.ref(), p1.ref()};
    write_manifest(store.service_dir(p1.ref()), p1);
    write_manifest(store.service_dir(p2.ref()), p2);
    CHECK_THROWS_AS(ServiceRuntime(p1, store), ValidationError);

    // Corrupt weights after install.
    const auto w = store.service_dir(ma.ref()) / "weights.zoow";
    auto bytes = read_file(w);
    bytes.back() ^= 0x01;
    write_file(w, bytes);
    CHECK_THROWS_AS(ServiceRuntime(ma, store), IntegrityError);
}

TEST_CASE("reproducible timestamp honours SOURCE_DATE_EPOCH") {
    ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
    CHECK(reproducible_timestamp() == "1970-01-02T00:00:00Z");
    ::unsetenv("SOURCE_DATE_EPOCH");
    CHECK(reproducible_timestamp() == "1970-01-01T00:00:00Z");
}

TEST_CASE("runtime rejects a manifest without leaf or pipeline") {
    fixture::TempDir tmp;
    const LocalStore store(tmp.path());
    XorShift64Star rng(2);
    const auto a = fixture::random_leaf(rng, "bare", {-1, 3});
    CHECK_THROWS_AS(ServiceRuntime(a.manifest, store, tmp.path()), ValidationError);
}
