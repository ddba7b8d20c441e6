#include "support/cases.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include "zoo/compose.hpp"
#include "zoo/kernels.hpp"

using namespace zoo;
namespace k = zoo::kernels;

namespace cases {
namespace {

Tensor rand_t(const Shape& s, XorShift64Star& rng, float lo = -1.0f, float hi = 1.0f) {
    return fixture::random_tensor(s, rng, lo, hi);
}

std::int64_t pick(XorShift64Star& rng, std::int64_t lo, std::int64_t hi) {
    return static_cast<std::int64_t>(fixture::int_in(rng, static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi)));
}

Port port(std::string name, Shape shape, std::string tag, DType dt = DType::F32) {
    return Port{std::move(name), dt, std::move(shape), std::move(tag)};
}

TypeSignature sig(std::vector<Port> ports) { return TypeSignature{std::move(ports)}; }

}  // namespace

double conv2d(XorShift64Star& rng) {
    const auto n = pick(rng, 1, 2), c = pick(rng, 1, 4), h = pick(rng, 1, 9), w = pick(rng, 1, 9);
    const auto o = pick(rng, 1, 5), kh = pick(rng, 1, 4), kw = pick(rng, 1, 4);
    const auto sh = pick(rng, 1, 3), sw = pick(rng, 1, 3);
    const bool same = kh > h || kw > w || rng.next() % 2;
    const Tensor x = rand_t({n, c, h, w}, rng), ker = rand_t({o, c, kh, kw}, rng), b = rand_t({o}, rng);
    const bool with_bias = rng.next() % 2;
    const Tensor y =
        k::conv2d(x, ker, with_bias ? &b : nullptr, {{sh, sw}, same ? k::Padding::Same : k::Padding::Valid});
    const auto bo = oracle::Array::of(b);
    return oracle::rel_err(y, oracle::conv2d(oracle::Array::of(x), oracle::Array::of(ker), with_bias ? &bo : nullptr,
                                             sh, sw, same));
}

double pool2d(XorShift64Star& rng) {
    const auto n = pick(rng, 1, 2), c = pick(rng, 1, 3), h = pick(rng, 1, 9), w = pick(rng, 1, 9);
    const auto kh = pick(rng, 1, 3), kw = pick(rng, 1, 3), sh = pick(rng, 1, 3), sw = pick(rng, 1, 3);
    const bool same = kh > h || kw > w || rng.next() % 2;
    const bool max = rng.next() % 2;
    const Tensor x = rand_t({n, c, h, w}, rng);
    if (rng.next() % 8 == 0) {
        const auto mode = max ? k::PoolMode::Max : k::PoolMode::Avg;
        return oracle::rel_err(k::global_pool(x, mode), oracle::global_pool(oracle::Array::of(x), max));
    }
    k::PoolSpec spec{kh, kw, {sh, sw}, same ? k::Padding::Same : k::Padding::Valid,
                     max ? k::PoolMode::Max : k::PoolMode::Avg};
    return oracle::rel_err(k::pool2d(x, spec), oracle::pool2d(oracle::Array::of(x), kh, kw, sh, sw, same, max));
}

double dense(XorShift64Star& rng) {
    const auto n = pick(rng, 1, 3), c = pick(rng, 1, 3), h = pick(rng, 1, 4), m = pick(rng, 1, 12);
    const Tensor x = (rng.next() % 2) ? rand_t({n, c, h, 2}, rng) : rand_t({n, c * h * 2}, rng);
    const Tensor wt = rand_t({c * h * 2, m}, rng), b = rand_t({m}, rng);
    const bool with_bias = rng.next() % 2;
    const auto bo = oracle::Array::of(b);
    return oracle::rel_err(k::dense(x, wt, with_bias ? &b : nullptr),
                           oracle::dense(oracle::Array::of(x), oracle::Array::of(wt), with_bias ? &bo : nullptr));
}

double batchnorm(XorShift64Star& rng) {
    const auto c = pick(rng, 1, 5);
    const Shape s =
        (rng.next() % 2) ? Shape{pick(rng, 1, 2), c, pick(rng, 1, 4), pick(rng, 1, 4)} : Shape{pick(rng, 1, 3), c};
    const Tensor x = rand_t(s, rng), g = rand_t({c}, rng, 0.5f, 1.5f), b = rand_t({c}, rng), m = rand_t({c}, rng),
                 v = rand_t({c}, rng, 0.01f, 2.0f);
    const bool scale = rng.next() % 2;
    const auto go = oracle::Array::of(g);
    const auto want = oracle::batchnorm(oracle::Array::of(x), scale ? &go : nullptr, oracle::Array::of(b),
                                        oracle::Array::of(m), oracle::Array::of(v), 1e-3);
    return oracle::rel_err(k::batchnorm_infer(x, scale ? &g : nullptr, b, m, v, 1e-3f), want);
}

double concat(XorShift64Star& rng) {
    const auto rank = pick(rng, 1, 4);
    Shape base;
    for (int d = 0; d < rank; ++d) base.push_back(pick(rng, 1, 3));
    const auto axis = pick(rng, 0, rank - 1);
    const auto parts = pick(rng, 1, 4);
    std::vector<Tensor> xs;
    std::vector<oracle::Array> os;
    std::vector<std::int64_t> sizes;
    for (int p = 0; p < parts; ++p) {
        Shape s = base;
        s[static_cast<std::size_t>(axis)] = pick(rng, 1, 3);
        sizes.push_back(s[static_cast<std::size_t>(axis)]);
        xs.push_back(rand_t(s, rng));
        os.push_back(oracle::Array::of(xs.back()));
    }
    const Tensor y = k::concat(xs, axis);
    const auto back = k::split(y, axis, sizes);
    if (back.size() != xs.size()) return 1.0;
    for (std::size_t p = 0; p < xs.size(); ++p)
        if (!back[p].bit_equal(xs[p])) return 1.0;
    return oracle::rel_err(y, oracle::concat(os, axis));
}

double activations(XorShift64Star& rng) {
    const Tensor x = rand_t({pick(rng, 1, 3), pick(rng, 1, 20)}, rng, -8.0f, 8.0f);
    const auto a = oracle::Array::of(x);
    double err = oracle::rel_err(k::activation(x, k::Activation::Relu), oracle::relu(a));
    err = std::max(err, oracle::rel_err(k::activation(x, k::Activation::Tanh), oracle::tanh(a)));
    err = std::max(err, oracle::rel_err(k::activation(x, k::Activation::Softmax), oracle::softmax(a)));
    if (!k::activation(x, k::Activation::None).bit_equal(x)) return 1.0;
    return err;
}

const std::vector<KernelCase>& kernel_cases() {
    static const std::vector<KernelCase> all{{"conv2d", conv2d},       {"pool2d", pool2d}, {"dense", dense},
                                             {"batchnorm", batchnorm}, {"concat", concat}, {"activations", activations}};
    return all;
}

std::vector<TypeSignature> one_port_domain() {
    std::vector<TypeSignature> out;
    const std::int64_t dims[] = {-1, 1, 2};
    for (DType dt : {DType::F32, DType::F64})
        for (const char* tag : {"a", "b", "any"}) {
            for (auto d0 : dims) out.push_back(sig({port("p", {d0}, tag, dt)}));
            for (auto d0 : dims)
                for (auto d1 : dims) out.push_back(sig({port("p", {d0, d1}, tag, dt)}));
        }
    return out;
}

std::vector<TypeSignature> two_port_domain() {
    std::vector<Port> singles;
    for (const char* tag : {"a", "any"}) {
        for (std::int64_t d0 : {-1, 2}) singles.push_back(port("p", {d0}, tag));
        for (std::int64_t d0 : {-1, 2})
            for (std::int64_t d1 : {-1, 2}) singles.push_back(port("p", {d0, d1}, tag));
    }
    std::vector<TypeSignature> out;
    for (const auto& a : singles)
        for (auto b : singles) {
            b.name = "q";
            out.push_back(sig({a, b}));
        }
    return out;
}

CompatTally compat_sweep() {
    const auto one = one_port_domain();
    const auto two = two_port_domain();
    CompatTally t;
    auto run = [&](const std::vector<TypeSignature>& ps, const std::vector<TypeSignature>& cs) {
        for (const auto& p : ps)
            for (const auto& c : cs) {
                ++t.checked;
                if (check_compat(p, c).compatible == oracle::compatible(p, c)) ++t.agree;
            }
    };
    run(one, one);
    run(two, two);
    run(one, two);
    run(two, one);
    return t;
}

bool compose_pair(XorShift64Star& rng, const LocalStore& store, const std::string& suffix) {
    const Shape in = (rng.next() % 2) ? Shape{-1, 2, 6, 6} : Shape{-1, 5};
    const auto a = fixture::random_leaf(rng, "a" + suffix, in);
    const Shape concrete = a.manifest.outputs.ports[0].shape;
    Shape pattern = concrete;
    for (std::size_t d = 1; d < pattern.size(); ++d)
        if (rng.next() % 3 == 0) pattern[d] = kWildcard;
    const auto b = fixture::random_leaf_with_input(rng, "b" + suffix, concrete, pattern, a.manifest.outputs.ports[0].tag);
    const auto ma = fixture::install(store, a), mb = fixture::install(store, b);
    if (!check_compat(ma.outputs, mb.inputs).compatible) return false;
    const auto composite = compose_sequential("ab" + suffix, {ma, mb});

    Shape xs = in;
    xs[0] = static_cast<std::int64_t>(fixture::int_in(rng, 1, 3));
    const std::vector<Tensor> x{fixture::random_tensor(xs, rng)};
    const auto whole = run_service(composite, x, store).outputs;
    const auto staged = run_service(mb, run_service(ma, x, store).outputs, store).outputs;
    return fixture::bit_equal(whole, staged);
}

}  // namespace cases
