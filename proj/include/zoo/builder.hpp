#pragma once

#include "zoo/graph.hpp"

#include <map>
#include <string>
#include <vector>

namespace zoo {

/// Handle to a node under construction.
struct Ref {
    int id = -1;
};

/// Layer declarations for GraphBuilder. Omitted names are generated from a
/// per-kind counter (`conv2d_3`, `dense_1`, ...).
struct Conv {
    std::int64_t out = 0;
    std::int64_t kh = 3;
    std::int64_t kw = 3;
    std::int64_t stride = 1;
    kernels::Padding pad = kernels::Padding::Same;
    kernels::Activation act = kernels::Activation::None;
    bool bias = true;
    std::string name = {};
};

struct Pool {
    kernels::PoolMode mode = kernels::PoolMode::Max;
    std::int64_t k = 2;
    std::int64_t stride = 2;
    kernels::Padding pad = kernels::Padding::Valid;
    std::string name = {};
};

struct Dense {
    std::int64_t units = 0;
    kernels::Activation act = kernels::Activation::None;
    bool bias = true;
    std::string name = {};
};

struct BatchNorm {
    float eps = 1e-3f;
    bool scale = true;
    std::string name = {};
};

/// Incremental graph construction with eager shape inference, so parameter
/// slot shapes are known as soon as a layer is declared.
class GraphBuilder {
public:
    explicit GraphBuilder(std::string graph_name);

    /// `shape` is the port pattern; dim 0 may be -1 (any batch).
    Ref input(std::string name, Shape shape);
    Ref conv(Ref x, Conv decl);
    Ref pool(Ref x, Pool decl);
    Ref global_pool(Ref x, kernels::PoolMode mode = kernels::PoolMode::Avg, std::string name = {});
    Ref dense(Ref x, Dense decl);
    Ref act(Ref x, kernels::Activation kind, std::string name = {});
    Ref relu(Ref x) { return act(x, kernels::Activation::Relu); }
    Ref batchnorm(Ref x, BatchNorm decl = {});
    Ref concat(std::vector<Ref> xs, std::int64_t axis = 1, std::string name = {});
    Ref flatten(Ref x, std::string name = {});

    const Shape& shape(Ref x) const { return shapes_.at(static_cast<std::size_t>(x.id)); }
    std::size_t size() const noexcept { return nodes_.size(); }

    Graph finish(std::vector<Ref> outputs);

private:
    Ref add(std::string name, std::string_view prefix, NodeAttrs attrs, std::vector<Ref> inputs,
            std::vector<ParamSpec> params);
    std::string auto_name(std::string_view prefix);

    std::string graph_name_;
    std::vector<Node> nodes_;
    std::vector<Shape> shapes_;
    std::vector<ParamSpec> params_;
    std::map<std::string, int, std::less<>> counters_;
};

}  // namespace zoo
