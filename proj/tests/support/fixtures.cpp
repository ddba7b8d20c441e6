#include "fixtures.hpp"

#include "zoo/builder.hpp"
#include "zoo/cli.hpp"
#include "zoo/executor.hpp"
#include "zoo/models.hpp"

#include <cstdlib>
#include <stdexcept>

namespace fs = std::filesystem;
using namespace zoo;

namespace fixture {

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "zoo-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

Tensor random_tensor(const Shape& shape, XorShift64Star& rng, float low, float high) {
    std::vector<float> data(static_cast<std::size_t>(element_count(shape)));
    for (auto& v : data) v = rng.uniform(low, high);
    return Tensor(shape, std::move(data));
}

bool bit_equal(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].bit_equal(b[i])) return false;
    return true;
}

std::uint64_t int_in(XorShift64Star& rng, std::uint64_t lo, std::uint64_t hi) {
    return lo + rng.next() % (hi - lo + 1);
}

namespace {

kernels::Activation random_act(XorShift64Star& rng, bool allow_softmax) {
    const auto k = int_in(rng, 0, allow_softmax ? 3 : 2);
    return static_cast<kernels::Activation>(k);
}

Ref random_spatial(GraphBuilder& b, Ref x, XorShift64Star& rng) {
    const int ops = static_cast<int>(int_in(rng, 1, 3));
    for (int i = 0; i < ops; ++i) {
        const Shape& s = b.shape(x);
        const auto h = s[2], w = s[3];
        switch (int_in(rng, 0, 3)) {
            case 0: {
                Conv c;
                c.out = static_cast<std::int64_t>(int_in(rng, 1, 4));
                c.kh = c.kw = static_cast<std::int64_t>(int_in(rng, 1, 3));
                c.stride = static_cast<std::int64_t>(int_in(rng, 1, 2));
                c.pad = (c.kh <= std::min(h, w) && int_in(rng, 0, 1)) ? kernels::Padding::Valid : kernels::Padding::Same;
                c.act = random_act(rng, false);
                c.bias = int_in(rng, 0, 1) == 1;
                x = b.conv(x, c);
                break;
            }
            case 1:
                if (h >= 2 && w >= 2) {
                    Pool p;
                    p.mode = int_in(rng, 0, 1) ? kernels::PoolMode::Max : kernels::PoolMode::Avg;
                    p.pad = int_in(rng, 0, 1) ? kernels::Padding::Same : kernels::Padding::Valid;
                    x = b.pool(x, p);
                }
                break;
            case 2: x = b.batchnorm(x, BatchNorm{1e-3f, int_in(rng, 0, 1) == 1}); break;
            default: x = b.act(x, random_act(rng, false) == kernels::Activation::Tanh ? kernels::Activation::Tanh
                                                                                        : kernels::Activation::Relu);
        }
    }
    return x;
}

Port port(std::string name, Shape shape, std::string tag) {
    return Port{std::move(name), DType::F32, std::move(shape), std::move(tag)};
}

}  // namespace

Leaf random_leaf_with_input(XorShift64Star& rng, const std::string& name, const Shape& concrete, const Shape& pattern,
                            const std::string& tag) {
    GraphBuilder b(name);
    Ref x = b.input("x", concrete);
    if (concrete.size() == 4) x = random_spatial(b, x, rng);
    const bool to_dense = concrete.size() == 2 || int_in(rng, 0, 1) == 1;
    if (to_dense) {
        const int layers = static_cast<int>(int_in(rng, 1, 2));
        for (int i = 0; i < layers; ++i) {
            Dense d;
            d.units = static_cast<std::int64_t>(int_in(rng, 1, 6));
            d.act = random_act(rng, i + 1 == layers);
            d.bias = int_in(rng, 0, 3) != 0;
            x = b.dense(x, d);
            if (int_in(rng, 0, 3) == 0) x = b.batchnorm(x);
        }
    }
    Leaf leaf{b.finish({x}), {}, {}};
    leaf.params = models::random_init(leaf.graph, rng.next());

    Shape out = b.shape(x);
    out[0] = kWildcard;
    const char* tags[] = {"feat", "feat", "probs", "any"};
    leaf.manifest.name = name;
    leaf.manifest.version = {1, 0, 0};
    leaf.manifest.authors = {"author-" + name};
    leaf.manifest.inputs.ports = {port("in", pattern, tag)};
    leaf.manifest.outputs.ports = {port("out", out, tags[int_in(rng, 0, 3)])};
    leaf.manifest.created = reproducible_timestamp();
    return leaf;
}

Leaf random_leaf(XorShift64Star& rng, const std::string& name, const Shape& input) {
    return random_leaf_with_input(rng, name, input, input, int_in(rng, 0, 1) ? "image" : "any");
}

ServiceManifest install(const LocalStore& store, const Leaf& leaf) {
    return write_leaf_service(store.service_dir(leaf.manifest.ref()), leaf.manifest, leaf.graph, leaf.params);
}

ServiceManifest lenet_service(const fs::path& dir, std::uint64_t seed) {
    return cli::build_model_service("lenet5", seed, dir);
}

}  // namespace fixture
