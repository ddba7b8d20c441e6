#pragma once

#include "zoo/kernels.hpp"
#include "zoo/tensor.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace zoo {

enum class OpKind { Input, Conv, Pool, Dense, Act, BatchNorm, Concat, Flatten };

std::string_view op_name(OpKind op);
OpKind parse_op(std::string_view text);

struct InputAttrs {
    /// Declared port shape; dim 0 may be -1 (any batch).
    Shape shape;
};

struct ConvAttrs {
    std::int64_t out_channels = 0;
    std::int64_t kh = 1;
    std::int64_t kw = 1;
    kernels::ConvSpec spec;
    bool bias = true;
    kernels::Activation fused = kernels::Activation::None;
};

struct PoolAttrs {
    kernels::PoolSpec spec;
    /// Window covers the whole spatial extent; kh/kw/stride are ignored.
    bool global = false;
};

struct DenseAttrs {
    std::int64_t units = 0;
    bool bias = true;
    kernels::Activation fused = kernels::Activation::None;
};

struct ActAttrs {
    kernels::Activation kind = kernels::Activation::Relu;
};

struct BatchNormAttrs {
    float eps = 1e-3f;
    /// When false the gamma slot is omitted and treated as 1.
    bool scale = true;
};

struct ConcatAttrs {
    std::int64_t axis = 1;
};

struct FlattenAttrs {};

using NodeAttrs =
    std::variant<InputAttrs, ConvAttrs, PoolAttrs, DenseAttrs, ActAttrs, BatchNormAttrs, ConcatAttrs, FlattenAttrs>;

OpKind op_of(const NodeAttrs& attrs);

struct Node {
    int id = 0;
    std::string name;
    NodeAttrs attrs;
    std::vector<int> inputs;
    /// Parameter slot names in the order the op consumes them.
    std::vector<std::string> params;

    OpKind op() const { return op_of(attrs); }
};

/// How random_init fills a parameter slot.
struct XavierInit {
    std::int64_t fan_in = 1;
    std::int64_t fan_out = 1;
};
struct UniformInit {
    float low = 0.0f;
    float high = 1.0f;
};
using InitRule = std::variant<XavierInit, UniformInit>;

struct ParamSpec {
    std::string name;
    Shape shape;
    InitRule init;
};

using ParamTable = std::map<std::string, Tensor>;

struct InputPort {
    std::string name;
    int node = 0;
};

/// Directed acyclic computation graph plus an optional bound parameter table.
/// Immutable once constructed; copies share the parameter table.
class Graph {
public:
    Graph() = default;
    /// Checks ids, predecessor ranges, input-node rules, output ids, slot
    /// declarations, acyclicity and reachability. Throws GraphError.
    Graph(std::string name, std::vector<Node> nodes, std::vector<int> outputs, std::vector<ParamSpec> params);

    const std::string& name() const noexcept { return name_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    const std::vector<InputPort>& inputs() const noexcept { return inputs_; }
    const std::vector<int>& outputs() const noexcept { return outputs_; }
    std::vector<std::string> output_names() const;
    const std::vector<ParamSpec>& param_specs() const noexcept { return param_specs_; }
    const ParamSpec* find_param(std::string_view name) const;

    /// Returns a copy bound to `table`. Every declared slot must be present
    /// with its declared shape; extra entries are rejected.
    Graph with_params(ParamTable table) const;
    bool has_params() const noexcept { return static_cast<bool>(params_); }
    const ParamTable& params() const;

private:
    std::string name_;
    std::vector<Node> nodes_;
    std::vector<InputPort> inputs_;
    std::vector<int> outputs_;
    std::vector<ParamSpec> param_specs_;
    std::shared_ptr<const ParamTable> params_;
};

}  // namespace zoo
