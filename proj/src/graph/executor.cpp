#include "zoo/executor.hpp"

#include "zoo/error.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <queue>

namespace zoo {
namespace {

std::string node_label(const Node& node) {
    return "node " + std::to_string(node.id) + " '" + node.name + "'";
}

[[noreturn]] void shape_fail(const Node& node, const std::string& what) {
    throw ShapeError(node_label(node) + ": " + what);
}

void require_rank(const Node& node, const Shape& s, std::size_t rank) {
    if (s.size() != rank)
        shape_fail(node, "expected rank " + std::to_string(rank) + " input, got " + shape_to_string(s));
}

kernels::AxisWindow window_or_throw(const Node& node, std::int64_t in, std::int64_t k, std::int64_t stride,
                                    kernels::Padding padding, const char* axis) {
    try {
        return kernels::window_extent(in, k, stride, padding, axis);
    } catch (const DimensionError& e) {
        shape_fail(node, e.what());
    }
}

// Verifies that declared parameter slot shapes agree with the input shape.
void check_param_shapes(const Graph& graph, const Node& node, const Shape& in) {
    auto slot_shape = [&](std::size_t i) -> const Shape& { return graph.find_param(node.params.at(i))->shape; };
    auto expect = [&](std::size_t i, const Shape& want) {
        if (slot_shape(i) != want)
            shape_fail(node, "parameter '" + node.params[i] + "' has shape " + shape_to_string(slot_shape(i)) +
                                 ", input requires " + shape_to_string(want));
    };
    switch (node.op()) {
        case OpKind::Conv: {
            const auto& a = std::get<ConvAttrs>(node.attrs);
            if (slot_shape(0)[1] != in[1])
                shape_fail(node, "axis 1 (channels): kernel expects " + std::to_string(slot_shape(0)[1]) +
                                     ", input has " + std::to_string(in[1]));
            expect(0, {a.out_channels, in[1], a.kh, a.kw});
            if (a.bias) expect(1, {a.out_channels});
            break;
        }
        case OpKind::Dense: {
            const auto& a = std::get<DenseAttrs>(node.attrs);
            const std::int64_t features = element_count(in) / in[0];
            if (slot_shape(0)[0] != features)
                shape_fail(node, "axis 1 (features): weights expect " + std::to_string(slot_shape(0)[0]) +
                                     ", input has " + std::to_string(features));
            expect(0, {features, a.units});
            if (a.bias) expect(1, {a.units});
            break;
        }
        case OpKind::BatchNorm:
            for (std::size_t i = 0; i < node.params.size(); ++i) expect(i, {in[1]});
            break;
        default:
            break;
    }
}

const Tensor& param(const Graph& graph, const Node& node, std::size_t slot) {
    return graph.params().at(node.params.at(slot));
}

Tensor evaluate(const Graph& graph, const Node& node, std::span<const Tensor> args) {
    using namespace kernels;
    switch (node.op()) {
        case OpKind::Input:
            return args.front();
        case OpKind::Conv: {
            const auto& a = std::get<ConvAttrs>(node.attrs);
            Tensor out = conv2d(args[0], param(graph, node, 0), a.bias ? &param(graph, node, 1) : nullptr, a.spec);
            return a.fused == Activation::None ? out : activation(out, a.fused);
        }
        case OpKind::Pool: {
            const auto& a = std::get<PoolAttrs>(node.attrs);
            return a.global ? global_pool(args[0], a.spec.mode) : pool2d(args[0], a.spec);
        }
        case OpKind::Dense: {
            const auto& a = std::get<DenseAttrs>(node.attrs);
            Tensor out = dense(args[0], param(graph, node, 0), a.bias ? &param(graph, node, 1) : nullptr);
            return a.fused == Activation::None ? out : activation(out, a.fused);
        }
        case OpKind::Act:
            return activation(args[0], std::get<ActAttrs>(node.attrs).kind);
        case OpKind::BatchNorm: {
            const auto& a = std::get<BatchNormAttrs>(node.attrs);
            const std::size_t base = a.scale ? 1 : 0;
            return batchnorm_infer(args[0], a.scale ? &param(graph, node, 0) : nullptr, param(graph, node, base),
                                   param(graph, node, base + 1), param(graph, node, base + 2), a.eps);
        }
        case OpKind::Concat:
            return concat(args, std::get<ConcatAttrs>(node.attrs).axis);
        case OpKind::Flatten:
            return flatten(args[0]);
    }
    throw ExecutionError("unhandled op");
}

bool matches_declared(const Shape& declared, const Shape& actual) {
    if (declared.size() != actual.size()) return false;
    for (std::size_t a = 0; a < declared.size(); ++a) {
        if (declared[a] != -1 && declared[a] != actual[a]) return false;
    }
    return true;
}

}  // namespace

std::vector<int> topo_sort(std::span<const Node> nodes) {
    const int count = static_cast<int>(nodes.size());
    std::vector<int> pending(nodes.size(), 0);
    std::vector<std::vector<int>> consumers(nodes.size());
    for (const auto& node : nodes) {
        for (int p : node.inputs) {
            if (p < 0 || p >= count)
                throw GraphError(node_label(node) + ": predecessor id " + std::to_string(p) + " out of range");
            ++pending[node.id];
            consumers[p].push_back(node.id);
        }
    }

    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int id = 0; id < count; ++id) {
        if (pending[id] == 0) ready.push(id);
    }
    std::vector<int> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        const int id = ready.top();
        ready.pop();
        order.push_back(id);
        for (int c : consumers[id]) {
            if (--pending[c] == 0) ready.push(c);
        }
    }
    if (static_cast<int>(order.size()) == count) return order;

    // Every unsorted node still waits on an unsorted predecessor, so walking
    // predecessors from any of them must revisit a node.
    int start = 0;
    while (pending[start] == 0) ++start;
    std::vector<int> walk;
    std::vector<int> position(nodes.size(), -1);
    int cur = start;
    while (position[cur] < 0) {
        position[cur] = static_cast<int>(walk.size());
        walk.push_back(cur);
        for (int p : nodes[cur].inputs) {
            if (pending[p] > 0) {
                cur = p;
                break;
            }
        }
    }
    std::vector<int> cycle(walk.begin() + position[cur], walk.end());
    std::reverse(cycle.begin(), cycle.end());
    std::string text;
    for (int id : cycle) text += nodes[id].name + " -> ";
    text += nodes[cycle.front()].name;
    throw GraphError("cycle detected: " + text);
}

std::vector<int> topo_sort(const Graph& graph) { return topo_sort(graph.nodes()); }

Shape infer_node_shape(const Node& node, std::span<const Shape> inputs) {
    switch (node.op()) {
        case OpKind::Input:
            return std::get<InputAttrs>(node.attrs).shape;
        case OpKind::Conv: {
            const auto& a = std::get<ConvAttrs>(node.attrs);
            const Shape& in = inputs[0];
            require_rank(node, in, 4);
            auto wy = window_or_throw(node, in[2], a.kh, a.spec.stride.h, a.spec.padding, "axis 2 (height)");
            auto wx = window_or_throw(node, in[3], a.kw, a.spec.stride.w, a.spec.padding, "axis 3 (width)");
            return {in[0], a.out_channels, wy.out, wx.out};
        }
        case OpKind::Pool: {
            const auto& a = std::get<PoolAttrs>(node.attrs);
            const Shape& in = inputs[0];
            require_rank(node, in, 4);
            if (a.global) return {in[0], in[1], 1, 1};
            auto wy = window_or_throw(node, in[2], a.spec.kh, a.spec.stride.h, a.spec.padding, "axis 2 (height)");
            auto wx = window_or_throw(node, in[3], a.spec.kw, a.spec.stride.w, a.spec.padding, "axis 3 (width)");
            return {in[0], in[1], wy.out, wx.out};
        }
        case OpKind::Dense: {
            const Shape& in = inputs[0];
            if (in.size() < 2) shape_fail(node, "axis 1: dense input needs rank >= 2, got " + shape_to_string(in));
            return {in[0], std::get<DenseAttrs>(node.attrs).units};
        }
        case OpKind::Act:
            return inputs[0];
        case OpKind::BatchNorm:
            if (inputs[0].size() < 2) shape_fail(node, "axis 1: batchnorm input needs a channel axis");
            return inputs[0];
        case OpKind::Concat: {
            const auto axis = std::get<ConcatAttrs>(node.attrs).axis;
            Shape out = inputs[0];
            if (axis < 0 || axis >= static_cast<std::int64_t>(out.size()))
                shape_fail(node, "axis " + std::to_string(axis) + " out of range for rank " + std::to_string(out.size()));
            out[axis] = 0;
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                const Shape& s = inputs[i];
                if (s.size() != inputs[0].size())
                    shape_fail(node, "input " + std::to_string(i) + " has rank " + std::to_string(s.size()) +
                                         ", expected " + std::to_string(inputs[0].size()));
                for (std::size_t a = 0; a < s.size(); ++a) {
                    if (static_cast<std::int64_t>(a) != axis && s[a] != inputs[0][a])
                        shape_fail(node, "axis " + std::to_string(a) + ": input " + std::to_string(i) + " has " +
                                             std::to_string(s[a]) + ", expected " + std::to_string(inputs[0][a]));
                }
                out[axis] += s[axis];
            }
            return out;
        }
        case OpKind::Flatten: {
            const Shape& in = inputs[0];
            return {in[0], element_count(in) / in[0]};
        }
    }
    shape_fail(node, "unhandled op");
}

std::vector<Shape> infer_shapes(const Graph& graph, const std::map<std::string, Shape>& input_shapes) {
    std::vector<Shape> shapes(graph.node_count());
    for (int id : topo_sort(graph)) {
        const Node& node = graph.node(id);
        if (node.op() == OpKind::Input) {
            auto it = input_shapes.find(node.name);
            if (it == input_shapes.end()) throw ShapeError(node_label(node) + ": no shape given for input port");
            const Shape& declared = std::get<InputAttrs>(node.attrs).shape;
            const Shape& actual = it->second;
            if (actual.size() != declared.size())
                shape_fail(node, "expected rank " + std::to_string(declared.size()) + ", got " + shape_to_string(actual));
            for (std::size_t a = 0; a < actual.size(); ++a) {
                if (actual[a] <= 0 || (declared[a] != -1 && declared[a] != actual[a]))
                    shape_fail(node, "axis " + std::to_string(a) + ": expected " + std::to_string(declared[a]) +
                                         ", got " + std::to_string(actual[a]));
            }
            shapes[id] = actual;
            continue;
        }
        std::vector<Shape> args;
        for (int p : node.inputs) args.push_back(shapes[p]);
        shapes[id] = infer_node_shape(node, args);
        if (!node.params.empty()) check_param_shapes(graph, node, args[0]);
    }
    if (input_shapes.size() != graph.inputs().size()) {
        for (const auto& [port, shape] : input_shapes) {
            bool known = std::any_of(graph.inputs().begin(), graph.inputs().end(),
                                     [&](const InputPort& p) { return p.name == port; });
            if (!known) throw ShapeError("unknown input port '" + port + "'");
        }
    }
    return shapes;
}

std::int64_t ProfileReport::node_sum_ns() const {
    std::int64_t sum = 0;
    for (const auto& r : records) sum += r.latency_ns;
    return sum;
}

ExecutionResult execute(const Graph& graph, const std::map<std::string, Tensor>& inputs, bool profile) {
    using Clock = std::chrono::steady_clock;

    for (const auto& port : graph.inputs()) {
        auto it = inputs.find(port.name);
        if (it == inputs.end() || it->second.empty())
            throw ExecutionError("missing input '" + port.name + "'");
        const Shape& declared = std::get<InputAttrs>(graph.node(port.node).attrs).shape;
        if (!matches_declared(declared, it->second.shape()))
            throw ShapeError("input '" + port.name + "' has shape " + shape_to_string(it->second.shape()) +
                             ", expected " + shape_to_string(declared));
    }
    if (inputs.size() != graph.inputs().size()) {
        for (const auto& [name, value] : inputs) {
            bool known = std::any_of(graph.inputs().begin(), graph.inputs().end(),
                                     [&](const InputPort& p) { return p.name == name; });
            if (!known) throw ExecutionError("unknown input '" + name + "'");
        }
    }
    if (!graph.param_specs().empty() && !graph.has_params())
        throw ExecutionError("missing parameter '" + graph.param_specs().front().name + "'");

    const std::vector<int> order = topo_sort(graph);
    std::vector<int> uses(graph.node_count(), 0);
    for (const auto& node : graph.nodes()) {
        for (int p : node.inputs) ++uses[p];
    }
    for (int o : graph.outputs()) ++uses[o];

    ExecutionResult result;
    ProfileReport report;
    if (profile) {
        report.records.reserve(order.size());
        report.started = std::chrono::system_clock::now();
    }

    std::vector<Tensor> values(graph.node_count());
    std::vector<Tensor> args;
    const auto run_start = Clock::now();
    for (int id : order) {
        const Node& node = graph.node(id);
        args.clear();
        if (node.op() == OpKind::Input) {
            args.push_back(inputs.find(node.name)->second);
        } else {
            for (int p : node.inputs) args.push_back(values[p]);
        }

        const auto t0 = profile ? Clock::now() : Clock::time_point{};
        Tensor out;
        try {
            out = evaluate(graph, node, args);
        } catch (const DimensionError& e) {
            shape_fail(node, e.what());
        }
        if (profile) {
            const auto t1 = Clock::now();
            report.records.push_back(
                {id, node.name, node.op(),
                 std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count(), out.shape()});
        }
        values[id] = std::move(out);

        args.clear();
        for (int p : node.inputs) {
            if (--uses[p] == 0) values[p] = Tensor();
        }
    }
    const auto run_end = Clock::now();

    for (int o : graph.outputs()) result.outputs.emplace(graph.node(o).name, values[o]);
    if (profile) {
        report.total_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(run_end - run_start).count();
        result.report = std::move(report);
    }
    return result;
}

std::vector<Tensor> ordered_outputs(const Graph& graph, const ExecutionResult& result) {
    std::vector<Tensor> out;
    for (int o : graph.outputs()) out.push_back(result.outputs.at(graph.node(o).name));
    return out;
}

std::string report_to_csv(const ProfileReport& report) {
    std::string csv = "node_id,name,op,latency_us,output_shape\n";
    char latency[64];
    for (const auto& r : report.records) {
        std::snprintf(latency, sizeof latency, "%.3f", r.latency_us());
        csv += std::to_string(r.id) + ',' + r.name + ',' + std::string(op_name(r.op)) + ',' + latency + ',' +
               shape_to_string(r.output_shape) + '\n';
    }
    return csv;
}

}  // namespace zoo
