#include "zoo/graph_io.hpp"

#include "zoo/detail/json_fields.hpp"
#include "zoo/error.hpp"

#include <fstream>
#include <sstream>

namespace zoo {
namespace {

using json = nlohmann::ordered_json;
using namespace detail;

json pair(std::int64_t a, std::int64_t b) { return json::array({a, b}); }

json attrs_to_json(const NodeAttrs& attrs) {
    json j = json::object();
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, InputAttrs>) {
                j["shape"] = a.shape;
            } else if constexpr (std::is_same_v<T, ConvAttrs>) {
                j["out_channels"] = a.out_channels;
                j["kernel"] = pair(a.kh, a.kw);
                j["stride"] = pair(a.spec.stride.h, a.spec.stride.w);
                j["padding"] = kernels::padding_name(a.spec.padding);
                j["bias"] = a.bias;
                j["activation"] = kernels::activation_name(a.fused);
            } else if constexpr (std::is_same_v<T, PoolAttrs>) {
                j["mode"] = kernels::pool_mode_name(a.spec.mode);
                j["global"] = a.global;
                j["kernel"] = pair(a.spec.kh, a.spec.kw);
                j["stride"] = pair(a.spec.stride.h, a.spec.stride.w);
                j["padding"] = kernels::padding_name(a.spec.padding);
            } else if constexpr (std::is_same_v<T, DenseAttrs>) {
                j["units"] = a.units;
                j["bias"] = a.bias;
                j["activation"] = kernels::activation_name(a.fused);
            } else if constexpr (std::is_same_v<T, ActAttrs>) {
                j["kind"] = kernels::activation_name(a.kind);
            } else if constexpr (std::is_same_v<T, BatchNormAttrs>) {
                j["eps"] = a.eps;
                j["scale"] = a.scale;
            } else if constexpr (std::is_same_v<T, ConcatAttrs>) {
                j["axis"] = a.axis;
            }
        },
        attrs);
    return j;
}

std::pair<std::int64_t, std::int64_t> get_pair(const json& obj, std::string_view key, const std::string& path) {
    const auto& arr = get_array(obj, key, path);
    const auto p = join_path(path, key);
    if (arr.size() != 2) throw ParseError(p, "expected two integers");
    return {as_int(arr[0], index_path(p, 0)), as_int(arr[1], index_path(p, 1))};
}

Shape get_shape(const json& obj, std::string_view key, const std::string& path) {
    const auto& arr = get_array(obj, key, path);
    Shape shape;
    for (std::size_t i = 0; i < arr.size(); ++i) shape.push_back(as_int(arr[i], index_path(join_path(path, key), i)));
    return shape;
}

template <typename F>
auto parse_enum(F parse, const json& obj, std::string_view key, const std::string& path) {
    try {
        return parse(get_string(obj, key, path));
    } catch (const ParseError& e) {
        if (!e.path().empty()) throw;
        throw ParseError(join_path(path, key), e.what());
    }
}

NodeAttrs attrs_from_json(OpKind op, const json& j, const std::string& path) {
    require_object(j, path);
    switch (op) {
        case OpKind::Input:
            return InputAttrs{get_shape(j, "shape", path)};
        case OpKind::Conv: {
            ConvAttrs a;
            a.out_channels = get_int(j, "out_channels", path);
            std::tie(a.kh, a.kw) = get_pair(j, "kernel", path);
            std::tie(a.spec.stride.h, a.spec.stride.w) = get_pair(j, "stride", path);
            a.spec.padding = parse_enum(kernels::parse_padding, j, "padding", path);
            a.bias = get_bool(j, "bias", path);
            a.fused = parse_enum(kernels::parse_activation, j, "activation", path);
            return a;
        }
        case OpKind::Pool: {
            PoolAttrs a;
            a.spec.mode = parse_enum(kernels::parse_pool_mode, j, "mode", path);
            a.global = get_bool(j, "global", path);
            std::tie(a.spec.kh, a.spec.kw) = get_pair(j, "kernel", path);
            std::tie(a.spec.stride.h, a.spec.stride.w) = get_pair(j, "stride", path);
            a.spec.padding = parse_enum(kernels::parse_padding, j, "padding", path);
            return a;
        }
        case OpKind::Dense: {
            DenseAttrs a;
            a.units = get_int(j, "units", path);
            a.bias = get_bool(j, "bias", path);
            a.fused = parse_enum(kernels::parse_activation, j, "activation", path);
            return a;
        }
        case OpKind::Act:
            return ActAttrs{parse_enum(kernels::parse_activation, j, "kind", path)};
        case OpKind::BatchNorm:
            return BatchNormAttrs{static_cast<float>(get_number(j, "eps", path)), get_bool(j, "scale", path)};
        case OpKind::Concat:
            return ConcatAttrs{get_int(j, "axis", path)};
        case OpKind::Flatten:
            return FlattenAttrs{};
    }
    throw ParseError(path, "unhandled op");
}

json init_to_json(const InitRule& rule) {
    if (auto* x = std::get_if<XavierInit>(&rule))
        return json{{"kind", "xavier"}, {"fan_in", x->fan_in}, {"fan_out", x->fan_out}};
    const auto& u = std::get<UniformInit>(rule);
    return json{{"kind", "uniform"}, {"low", u.low}, {"high", u.high}};
}

InitRule init_from_json(const json& j, const std::string& path) {
    const auto kind = get_string(j, "kind", path);
    if (kind == "xavier") return XavierInit{get_int(j, "fan_in", path), get_int(j, "fan_out", path)};
    if (kind == "uniform")
        return UniformInit{static_cast<float>(get_number(j, "low", path)),
                           static_cast<float>(get_number(j, "high", path))};
    throw ParseError(join_path(path, "kind"), "unknown init kind '" + kind + "'");
}

}  // namespace

std::string graph_to_json(const Graph& graph) {
    json root;
    root["format"] = "zoo-graph/1";
    root["name"] = graph.name();
    json nodes = json::array();
    for (const auto& node : graph.nodes()) {
        json n;
        n["id"] = node.id;
        n["name"] = node.name;
        n["op"] = op_name(node.op());
        n["inputs"] = node.inputs;
        n["attrs"] = attrs_to_json(node.attrs);
        n["params"] = node.params;
        nodes.push_back(std::move(n));
    }
    root["nodes"] = std::move(nodes);
    root["outputs"] = graph.outputs();
    json params = json::array();
    for (const auto& spec : graph.param_specs())
        params.push_back(json{{"name", spec.name}, {"shape", spec.shape}, {"init", init_to_json(spec.init)}});
    root["params"] = std::move(params);
    return root.dump(1) + "\n";
}

Graph graph_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("invalid JSON: ") + e.what());
    }
    require_object(root, "");
    if (get_string(root, "format", "") != "zoo-graph/1") throw ParseError("format", "unsupported graph format");

    std::vector<Node> nodes;
    const auto& jnodes = get_array(root, "nodes", "");
    for (std::size_t i = 0; i < jnodes.size(); ++i) {
        const auto path = index_path("nodes", i);
        const auto& jn = require_object(jnodes[i], path);
        Node node;
        node.id = static_cast<int>(get_int(jn, "id", path));
        node.name = get_string(jn, "name", path);
        const OpKind op = parse_enum(parse_op, jn, "op", path);
        const auto& ins = get_array(jn, "inputs", path);
        for (std::size_t k = 0; k < ins.size(); ++k)
            node.inputs.push_back(static_cast<int>(as_int(ins[k], index_path(join_path(path, "inputs"), k))));
        node.attrs = attrs_from_json(op, field(jn, "attrs", path), join_path(path, "attrs"));
        const auto& ps = get_array(jn, "params", path);
        for (std::size_t k = 0; k < ps.size(); ++k) {
            if (!ps[k].is_string()) throw ParseError(index_path(join_path(path, "params"), k), "expected a string");
            node.params.push_back(ps[k].get<std::string>());
        }
        nodes.push_back(std::move(node));
    }

    std::vector<int> outputs;
    const auto& jouts = get_array(root, "outputs", "");
    for (std::size_t i = 0; i < jouts.size(); ++i)
        outputs.push_back(static_cast<int>(as_int(jouts[i], index_path("outputs", i))));

    std::vector<ParamSpec> specs;
    const auto& jparams = get_array(root, "params", "");
    for (std::size_t i = 0; i < jparams.size(); ++i) {
        const auto path = index_path("params", i);
        specs.push_back({get_string(jparams[i], "name", path), get_shape(jparams[i], "shape", path),
                         init_from_json(field(jparams[i], "init", path), join_path(path, "init"))});
    }
    return Graph(get_string(root, "name", ""), std::move(nodes), std::move(outputs), std::move(specs));
}

void save_graph(const Graph& graph, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << graph_to_json(graph);
    if (!out) throw IoError("failed writing " + path.string());
}

Graph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return graph_from_json(buf.str());
}

}  // namespace zoo
