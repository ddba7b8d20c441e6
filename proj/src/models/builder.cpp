#include "zoo/builder.hpp"

#include "zoo/error.hpp"
#include "zoo/executor.hpp"

namespace zoo {
namespace {

// Bias slots share the bound of the kernel they belong to.
XavierInit xavier(std::int64_t fan_in, std::int64_t fan_out) { return {fan_in, fan_out}; }

void require_positive(std::int64_t v, const char* what) {
    if (v < 1) throw GraphError(std::string(what) + " must be >= 1, got " + std::to_string(v));
}

}  // namespace

GraphBuilder::GraphBuilder(std::string graph_name) : graph_name_(std::move(graph_name)) {}

std::string GraphBuilder::auto_name(std::string_view prefix) {
    auto it = counters_.find(prefix);
    if (it == counters_.end()) it = counters_.emplace(std::string(prefix), 0).first;
    return std::string(prefix) + "_" + std::to_string(++it->second);
}

Ref GraphBuilder::add(std::string name, std::string_view prefix, NodeAttrs attrs, std::vector<Ref> inputs,
                      std::vector<ParamSpec> params) {
    Node node;
    node.id = static_cast<int>(nodes_.size());
    node.name = name.empty() ? auto_name(prefix) : std::move(name);
    node.attrs = std::move(attrs);
    std::vector<Shape> in_shapes;
    for (Ref r : inputs) {
        if (r.id < 0 || r.id >= node.id) throw GraphError("layer '" + node.name + "' references an unknown node");
        node.inputs.push_back(r.id);
        in_shapes.push_back(shapes_[r.id]);
    }
    Shape out = infer_node_shape(node, in_shapes);
    if (node.op() == OpKind::Input && out[0] == -1) out[0] = 1;
    for (auto& p : params) {
        p.name = node.name + "/" + p.name;
        node.params.push_back(p.name);
        params_.push_back(std::move(p));
    }
    nodes_.push_back(std::move(node));
    shapes_.push_back(std::move(out));
    return Ref{nodes_.back().id};
}

Ref GraphBuilder::input(std::string name, Shape shape) {
    return add(std::move(name), "input", InputAttrs{std::move(shape)}, {}, {});
}

Ref GraphBuilder::conv(Ref x, Conv decl) {
    require_positive(decl.out, "conv out channels");
    require_positive(decl.kh, "conv kernel height");
    require_positive(decl.kw, "conv kernel width");
    require_positive(decl.stride, "conv stride");
    const Shape& in = shape(x);
    if (in.size() != 4) throw ShapeError("conv expects an NCHW input, got " + shape_to_string(in));
    ConvAttrs a;
    a.out_channels = decl.out;
    a.kh = decl.kh;
    a.kw = decl.kw;
    a.spec = {{decl.stride, decl.stride}, decl.pad};
    a.bias = decl.bias;
    a.fused = decl.act;
    const auto init = xavier(in[1] * decl.kh * decl.kw, decl.out * decl.kh * decl.kw);
    std::vector<ParamSpec> params{{"kernel", {decl.out, in[1], decl.kh, decl.kw}, init}};
    if (decl.bias) params.push_back({"bias", {decl.out}, init});
    return add(std::move(decl.name), "conv2d", a, {x}, std::move(params));
}

Ref GraphBuilder::pool(Ref x, Pool decl) {
    PoolAttrs a;
    a.spec = {decl.k, decl.k, {decl.stride, decl.stride}, decl.pad, decl.mode};
    return add(std::move(decl.name), decl.mode == kernels::PoolMode::Max ? "max_pooling2d" : "average_pooling2d", a,
               {x}, {});
}

Ref GraphBuilder::global_pool(Ref x, kernels::PoolMode mode, std::string name) {
    PoolAttrs a;
    a.spec.mode = mode;
    a.spec.kh = a.spec.kw = 1;
    a.spec.stride = {1, 1};
    a.global = true;
    return add(std::move(name), "global_pooling2d", a, {x}, {});
}

Ref GraphBuilder::dense(Ref x, Dense decl) {
    require_positive(decl.units, "dense units");
    const Shape& in = shape(x);
    const std::int64_t features = element_count(in) / in[0];
    DenseAttrs a{decl.units, decl.bias, decl.act};
    const auto init = xavier(features, decl.units);
    std::vector<ParamSpec> params{{"kernel", {features, decl.units}, init}};
    if (decl.bias) params.push_back({"bias", {decl.units}, init});
    return add(std::move(decl.name), "dense", a, {x}, std::move(params));
}

Ref GraphBuilder::act(Ref x, kernels::Activation kind, std::string name) {
    return add(std::move(name), "activation", ActAttrs{kind}, {x}, {});
}

Ref GraphBuilder::batchnorm(Ref x, BatchNorm decl) {
    const Shape& in = shape(x);
    if (in.size() < 2) throw ShapeError("batchnorm needs a channel axis");
    const Shape ch{in[1]};
    std::vector<ParamSpec> params;
    if (decl.scale) params.push_back({"gamma", ch, UniformInit{0.5f, 1.5f}});
    params.push_back({"beta", ch, UniformInit{-0.1f, 0.1f}});
    params.push_back({"moving_mean", ch, UniformInit{-0.1f, 0.1f}});
    params.push_back({"moving_variance", ch, UniformInit{0.5f, 1.5f}});
    return add(std::move(decl.name), "batch_normalization", BatchNormAttrs{decl.eps, decl.scale}, {x},
               std::move(params));
}

Ref GraphBuilder::concat(std::vector<Ref> xs, std::int64_t axis, std::string name) {
    return add(std::move(name), "concatenate", ConcatAttrs{axis}, std::move(xs), {});
}

Ref GraphBuilder::flatten(Ref x, std::string name) {
    return add(std::move(name), "flatten", FlattenAttrs{}, {x}, {});
}

Graph GraphBuilder::finish(std::vector<Ref> outputs) {
    std::vector<int> ids;
    for (Ref r : outputs) ids.push_back(r.id);
    return Graph(graph_name_, nodes_, std::move(ids), params_);
}

}  // namespace zoo
