#include "zoo/models.hpp"

#include "zoo/builder.hpp"
#include "zoo/error.hpp"
#include "zoo/rng.hpp"

#include <cmath>

namespace zoo::models {
namespace {

using kernels::Activation;
using kernels::Padding;
using kernels::PoolMode;

// ---------------------------------------------------------------------------
// InceptionV3 building blocks. Every convolution is a conv -> batchnorm ->
// relu triplet (three nodes); pools and concats are one node each.

class Inception {
public:
    explicit Inception(GraphBuilder& b) : b_(b) {}

    Ref unit(Ref x, std::int64_t out, std::int64_t kh, std::int64_t kw, std::int64_t stride = 1,
             Padding pad = Padding::Same) {
        x = b_.conv(x, {.out = out, .kh = kh, .kw = kw, .stride = stride, .pad = pad, .bias = false});
        x = b_.batchnorm(x, {.eps = 1e-3f, .scale = false});
        return b_.relu(x);
    }

    Ref avg_same(Ref x) { return b_.pool(x, {.mode = PoolMode::Avg, .k = 3, .stride = 1, .pad = Padding::Same}); }
    Ref max_valid(Ref x) { return b_.pool(x, {.mode = PoolMode::Max, .k = 3, .stride = 2, .pad = Padding::Valid}); }

    Ref stem(Ref x) {
        x = unit(x, 32, 3, 3, 2, Padding::Valid);
        x = unit(x, 32, 3, 3, 1, Padding::Valid);
        x = unit(x, 64, 3, 3);
        x = max_valid(x);
        x = unit(x, 80, 1, 1, 1, Padding::Valid);
        x = unit(x, 192, 3, 3, 1, Padding::Valid);
        return max_valid(x);
    }

    // 35x35 block; mixed0..mixed2.
    Ref block_a(Ref x, std::int64_t pool_features) {
        Ref b1 = unit(x, 64, 1, 1);
        Ref b5 = unit(unit(x, 48, 1, 1), 64, 5, 5);
        Ref b3 = unit(unit(unit(x, 64, 1, 1), 96, 3, 3), 96, 3, 3);
        Ref bp = unit(avg_same(x), pool_features, 1, 1);
        return b_.concat({b1, b5, b3, bp});
    }

    // 35x35 -> 17x17; mixed3.
    Ref reduction_a(Ref x) {
        Ref b3 = unit(x, 384, 3, 3, 2, Padding::Valid);
        Ref bd = unit(unit(unit(x, 64, 1, 1), 96, 3, 3), 96, 3, 3, 2, Padding::Valid);
        Ref bp = max_valid(x);
        return b_.concat({b3, bd, bp});
    }

    // 17x17 block with factorised 7x7 convolutions; mixed4..mixed7.
    Ref block_b(Ref x, std::int64_t c7) {
        Ref b1 = unit(x, 192, 1, 1);
        Ref b7 = unit(unit(unit(x, c7, 1, 1), c7, 1, 7), 192, 7, 1);
        Ref bd = unit(x, c7, 1, 1);
        bd = unit(bd, c7, 7, 1);
        bd = unit(bd, c7, 1, 7);
        bd = unit(bd, c7, 7, 1);
        bd = unit(bd, 192, 1, 7);
        Ref bp = unit(avg_same(x), 192, 1, 1);
        return b_.concat({b1, b7, bd, bp});
    }

    // 17x17 -> 8x8; mixed8.
    Ref reduction_b(Ref x) {
        Ref b3 = unit(unit(x, 192, 1, 1), 320, 3, 3, 2, Padding::Valid);
        Ref b7 = unit(x, 192, 1, 1);
        b7 = unit(b7, 192, 1, 7);
        b7 = unit(b7, 192, 7, 1);
        b7 = unit(b7, 192, 3, 3, 2, Padding::Valid);
        Ref bp = max_valid(x);
        return b_.concat({b3, b7, bp});
    }

    // 8x8 block with split 1x3/3x1 branches; mixed9, mixed10.
    Ref block_c(Ref x) {
        Ref b1 = unit(x, 320, 1, 1);
        Ref b3 = unit(x, 384, 1, 1);
        b3 = b_.concat({unit(b3, 384, 1, 3), unit(b3, 384, 3, 1)});
        Ref bd = unit(unit(x, 448, 1, 1), 384, 3, 3);
        bd = b_.concat({unit(bd, 384, 1, 3), unit(bd, 384, 3, 1)});
        Ref bp = unit(avg_same(x), 192, 1, 1);
        return b_.concat({b1, b3, bd, bp});
    }

private:
    GraphBuilder& b_;
};

}  // namespace

Graph build_lenet5() {
    GraphBuilder b("lenet5");
    Ref x = b.input("input", {-1, 1, 32, 32});
    x = b.conv(x, {.out = 6, .kh = 5, .kw = 5, .pad = Padding::Valid, .act = Activation::Tanh});
    x = b.pool(x, {.mode = PoolMode::Avg, .k = 2, .stride = 2});
    x = b.conv(x, {.out = 16, .kh = 5, .kw = 5, .pad = Padding::Valid, .act = Activation::Tanh});
    x = b.pool(x, {.mode = PoolMode::Avg, .k = 2, .stride = 2});
    x = b.conv(x, {.out = 120, .kh = 5, .kw = 5, .pad = Padding::Valid, .act = Activation::Tanh});
    x = b.dense(x, {.units = 84, .act = Activation::Tanh});
    x = b.dense(x, {.units = 10, .act = Activation::Softmax});
    return b.finish({x});
}

Graph build_vgg16() {
    GraphBuilder b("vgg16");
    Ref x = b.input("input", {-1, 3, 224, 224});
    constexpr std::int64_t kStages[5][2] = {{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}};
    for (const auto& [channels, convs] : kStages) {
        for (std::int64_t i = 0; i < convs; ++i) x = b.relu(b.conv(x, {.out = channels}));
        x = b.pool(x, {.mode = PoolMode::Max, .k = 2, .stride = 2});
    }
    x = b.relu(b.dense(x, {.units = 4096}));
    x = b.relu(b.dense(x, {.units = 4096}));
    x = b.act(b.dense(x, {.units = 1000}), Activation::Softmax);
    return b.finish({x});
}

Graph build_inceptionv3(std::int64_t image_size) {
    if (image_size < 75) throw GraphError("inceptionv3 needs an input of at least 75x75");
    GraphBuilder b("inceptionv3");
    Inception net(b);
    Ref x = b.input("input", {-1, 3, image_size, image_size});
    x = net.stem(x);
    for (std::int64_t pool_features : {32, 64, 64}) x = net.block_a(x, pool_features);
    x = net.reduction_a(x);
    for (std::int64_t c7 : {128, 160, 160, 192}) x = net.block_b(x, c7);
    x = net.reduction_b(x);
    for (int i = 0; i < 2; ++i) x = net.block_c(x);
    x = b.global_pool(x, PoolMode::Avg);
    x = b.dense(x, {.units = 1000, .act = Activation::Softmax});
    return b.finish({x});
}

std::vector<std::string> model_names() { return {"lenet5", "vgg16", "inceptionv3"}; }

Graph build_model(std::string_view name) {
    if (name == "lenet5") return build_lenet5();
    if (name == "vgg16") return build_vgg16();
    if (name == "inceptionv3") return build_inceptionv3();
    throw ValidationError("unknown model '" + std::string(name) + "' (expected lenet5, vgg16 or inceptionv3)");
}

ParamCount count_params(const Graph& graph) {
    ParamCount pc;
    for (const auto& spec : graph.param_specs()) pc.count += element_count(spec.shape);
    pc.bytes = pc.count * static_cast<std::int64_t>(sizeof(float));
    return pc;
}

float init_bound(const ParamSpec& spec) {
    if (const auto* x = std::get_if<XavierInit>(&spec.init))
        return static_cast<float>(std::sqrt(6.0 / static_cast<double>(x->fan_in + x->fan_out)));
    const auto& u = std::get<UniformInit>(spec.init);
    return std::max(std::fabs(u.low), std::fabs(u.high));
}

ParamTable random_init(const Graph& graph, std::uint64_t seed) {
    XorShift64Star rng(seed);
    ParamTable table;
    for (const auto& spec : graph.param_specs()) {
        float low = 0.0f, high = 0.0f;
        if (std::holds_alternative<XavierInit>(spec.init)) {
            high = init_bound(spec);
            low = -high;
        } else {
            low = std::get<UniformInit>(spec.init).low;
            high = std::get<UniformInit>(spec.init).high;
        }
        std::vector<float> values(static_cast<std::size_t>(element_count(spec.shape)));
        for (auto& v : values) v = rng.uniform(low, high);
        table.emplace(spec.name, Tensor(spec.shape, std::move(values)));
    }
    return table;
}

}  // namespace zoo::models
