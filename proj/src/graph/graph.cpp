#include "zoo/graph.hpp"

#include "zoo/error.hpp"
#include "zoo/executor.hpp"

#include <algorithm>
#include <set>

namespace zoo {
namespace {

bool valid_name(std::string_view name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
               c == '-' || c == '.' || c == '/';
    });
}

std::size_t expected_param_count(const NodeAttrs& attrs) {
    if (auto* c = std::get_if<ConvAttrs>(&attrs)) return c->bias ? 2 : 1;
    if (auto* d = std::get_if<DenseAttrs>(&attrs)) return d->bias ? 2 : 1;
    if (auto* b = std::get_if<BatchNormAttrs>(&attrs)) return b->scale ? 4 : 3;
    return 0;
}

[[noreturn]] void fail(const Node& node, const std::string& what) {
    throw GraphError("node " + std::to_string(node.id) + " '" + node.name + "': " + what);
}

}  // namespace

std::string_view op_name(OpKind op) {
    switch (op) {
        case OpKind::Input: return "INPUT";
        case OpKind::Conv: return "CONV";
        case OpKind::Pool: return "POOL";
        case OpKind::Dense: return "DENSE";
        case OpKind::Act: return "ACT";
        case OpKind::BatchNorm: return "BN";
        case OpKind::Concat: return "CONCAT";
        case OpKind::Flatten: return "FLATTEN";
    }
    return "INPUT";
}

OpKind parse_op(std::string_view text) {
    for (auto op : {OpKind::Input, OpKind::Conv, OpKind::Pool, OpKind::Dense, OpKind::Act, OpKind::BatchNorm,
                    OpKind::Concat, OpKind::Flatten}) {
        if (op_name(op) == text) return op;
    }
    throw ParseError("", "unknown op '" + std::string(text) + "'");
}

OpKind op_of(const NodeAttrs& attrs) {
    return static_cast<OpKind>(attrs.index());
}

Graph::Graph(std::string name, std::vector<Node> nodes, std::vector<int> outputs, std::vector<ParamSpec> params)
    : name_(std::move(name)), nodes_(std::move(nodes)), outputs_(std::move(outputs)), param_specs_(std::move(params)) {
    if (nodes_.empty()) throw GraphError("graph '" + name_ + "' has no nodes");
    const int count = static_cast<int>(nodes_.size());

    std::set<std::string, std::less<>> spec_names;
    for (const auto& spec : param_specs_) {
        if (!valid_name(spec.name)) throw GraphError("invalid parameter slot name '" + spec.name + "'");
        if (!spec_names.insert(spec.name).second) throw GraphError("duplicate parameter slot '" + spec.name + "'");
        try {
            check_shape(spec.shape);
        } catch (const DimensionError& e) {
            throw GraphError("parameter slot '" + spec.name + "': " + e.what());
        }
    }

    std::set<std::string, std::less<>> names;
    std::set<std::string, std::less<>> used_slots;
    for (int i = 0; i < count; ++i) {
        const Node& node = nodes_[i];
        if (node.id != i) throw GraphError("node at position " + std::to_string(i) + " has id " + std::to_string(node.id));
        if (!valid_name(node.name)) fail(node, "invalid name");
        if (!names.insert(node.name).second) fail(node, "duplicate name");
        for (int p : node.inputs) {
            if (p < 0 || p >= count) fail(node, "predecessor id " + std::to_string(p) + " out of range");
        }

        const OpKind op = node.op();
        if (op == OpKind::Input) {
            if (!node.inputs.empty()) fail(node, "INPUT node cannot have predecessors");
            const Shape& shape = std::get<InputAttrs>(node.attrs).shape;
            if (shape.empty() || shape.size() > 4) fail(node, "input rank must be in 1..4");
            for (std::size_t a = 0; a < shape.size(); ++a) {
                if (shape[a] <= 0 && !(a == 0 && shape[a] == -1))
                    fail(node, "input axis " + std::to_string(a) + " must be positive (axis 0 may be -1)");
            }
            inputs_.push_back({node.name, node.id});
        } else if (op == OpKind::Concat) {
            if (node.inputs.empty()) fail(node, "CONCAT needs at least one predecessor");
        } else if (node.inputs.size() != 1) {
            fail(node, std::string(op_name(op)) + " takes exactly one predecessor");
        }

        if (node.params.size() != expected_param_count(node.attrs))
            fail(node, "expects " + std::to_string(expected_param_count(node.attrs)) + " parameter slots, has " +
                           std::to_string(node.params.size()));
        for (const auto& slot : node.params) {
            if (!spec_names.contains(slot)) fail(node, "undeclared parameter slot '" + slot + "'");
            if (!used_slots.insert(slot).second) fail(node, "parameter slot '" + slot + "' is shared");
        }
    }
    if (used_slots.size() != spec_names.size()) throw GraphError("graph declares parameter slots no node uses");

    if (outputs_.empty()) throw GraphError("graph '" + name_ + "' declares no outputs");
    std::set<int> seen_outputs;
    for (int o : outputs_) {
        if (o < 0 || o >= count) throw GraphError("output id " + std::to_string(o) + " out of range");
        if (!seen_outputs.insert(o).second) throw GraphError("output id " + std::to_string(o) + " listed twice");
    }

    // Acyclicity; with every non-input node having a predecessor this also
    // makes every node reachable from an input.
    topo_sort(nodes_);
}

std::vector<std::string> Graph::output_names() const {
    std::vector<std::string> out;
    for (int id : outputs_) out.push_back(nodes_[id].name);
    return out;
}

const ParamSpec* Graph::find_param(std::string_view name) const {
    for (const auto& spec : param_specs_) {
        if (spec.name == name) return &spec;
    }
    return nullptr;
}

Graph Graph::with_params(ParamTable table) const {
    for (const auto& spec : param_specs_) {
        auto it = table.find(spec.name);
        if (it == table.end()) throw ExecutionError("missing parameter '" + spec.name + "'");
        if (it->second.shape() != spec.shape)
            throw ExecutionError("parameter '" + spec.name + "' has shape " + shape_to_string(it->second.shape()) +
                                 ", expected " + shape_to_string(spec.shape));
    }
    if (table.size() != param_specs_.size()) {
        for (const auto& [key, value] : table) {
            if (!find_param(key)) throw ExecutionError("unexpected parameter '" + key + "'");
        }
    }
    Graph copy = *this;
    copy.params_ = std::make_shared<const ParamTable>(std::move(table));
    return copy;
}

const ParamTable& Graph::params() const {
    if (!params_) throw ExecutionError("graph '" + name_ + "' has no parameters bound");
    return *params_;
}

}  // namespace zoo
