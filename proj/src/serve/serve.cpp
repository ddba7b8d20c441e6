#include "zoo/serve.hpp"

#include "detail/http_server.hpp"
#include "zoo/detail/json_fields.hpp"
#include "zoo/error.hpp"
#include "zoo/hashing.hpp"
#include "zoo/weights.hpp"

#include <chrono>
#include <set>

namespace zoo::serve {
namespace {

using json = nlohmann::ordered_json;
using namespace zoo::detail;

/// A request problem mapped to an HTTP status.
struct RequestError {
    int status;
    std::string path;
    std::string message;
};

json tensor_to_json(const std::string& name, const Tensor& t) {
    json j;
    j["name"] = name;
    j["dtype"] = dtype_name(t.dtype());
    j["shape"] = t.shape();
    j["data"] = base64_encode(f32_to_le_bytes(t.data()));
    return j;
}

json record_to_json(const NodeRecord& r) {
    json j;
    j["node_id"] = r.id;
    j["name"] = r.name;
    j["op"] = op_name(r.op);
    j["latency_us"] = r.latency_us();
    j["output_shape"] = shape_to_string(r.output_shape);
    return j;
}

Reply error_reply(const RequestError& e) {
    json j;
    j["error"]["status"] = e.status;
    j["error"]["path"] = e.path;
    j["error"]["message"] = e.message;
    return {e.status, j.dump() + "\n"};
}

struct DecodedInput {
    std::string name;
    DType dtype;
    Shape shape;
    std::vector<std::uint8_t> payload;
    std::string path;
};

// Structural decoding; every failure here is a 400.
std::vector<DecodedInput> decode_request(const std::string& body) {
    json root;
    try {
        root = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("body is not valid JSON: ") + e.what());
    }
    require_object(root, "");
    const auto& inputs = get_array(root, "inputs", "");
    std::vector<DecodedInput> out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto path = index_path("inputs", i);
        require_object(inputs[i], path);
        DecodedInput d;
        d.path = path;
        d.name = get_string(inputs[i], "name", path);
        try {
            d.dtype = parse_dtype(get_string(inputs[i], "dtype", path));
        } catch (const ParseError& e) {
            if (!e.path().empty()) throw;
            throw ParseError(join_path(path, "dtype"), e.what());
        }
        const auto& dims = get_array(inputs[i], "shape", path);
        const auto shape_path = join_path(path, "shape");
        if (dims.empty() || dims.size() > 4) throw ParseError(shape_path, "rank must be in 1..4");
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const auto v = as_int(dims[k], index_path(shape_path, k));
            if (v <= 0) throw ParseError(index_path(shape_path, k), "dims must be positive");
            d.shape.push_back(v);
        }
        const auto data_path = join_path(path, "data");
        try {
            d.payload = base64_decode(get_string(inputs[i], "data", path));
        } catch (const ParseError& e) {
            if (!e.path().empty()) throw;
            throw ParseError(data_path, e.what());
        }
        const std::size_t width = d.dtype == DType::F32 ? 4 : 8;
        const auto expected = static_cast<std::size_t>(element_count(d.shape)) * width;
        if (d.payload.size() != expected)
            throw ParseError(data_path, "decoded payload has " + std::to_string(d.payload.size()) + " bytes, shape " +
                                            shape_to_string(d.shape) + " needs " + std::to_string(expected));
        out.push_back(std::move(d));
    }
    return out;
}

// Binds decoded inputs to signature ports by name; failures are 422.
std::vector<Tensor> bind_inputs(const TypeSignature& sig, std::vector<DecodedInput> decoded) {
    std::set<std::string> seen;
    for (const auto& d : decoded) {
        if (!seen.insert(d.name).second) throw RequestError{422, d.path + ".name", "port '" + d.name + "' given twice"};
        bool known = false;
        for (const auto& p : sig.ports) known = known || p.name == d.name;
        if (!known) throw RequestError{422, d.path + ".name", "service has no input port '" + d.name + "'"};
    }
    std::vector<Tensor> tensors;
    for (std::size_t i = 0; i < sig.ports.size(); ++i) {
        const Port& port = sig.ports[i];
        auto it = std::find_if(decoded.begin(), decoded.end(), [&](const DecodedInput& d) { return d.name == port.name; });
        if (it == decoded.end())
            throw RequestError{422, "inputs", "missing input for port " + std::to_string(i) + " '" + port.name + "'"};
        const std::string label = "port " + std::to_string(i) + " '" + port.name + "'";
        if (it->dtype != port.dtype)
            throw RequestError{422, it->path + ".dtype",
                               label + ": dtype " + std::string(dtype_name(it->dtype)) + ", expected " +
                                   std::string(dtype_name(port.dtype))};
        if (it->shape.size() != port.shape.size())
            throw RequestError{422, it->path + ".shape",
                               label + ": expected rank " + std::to_string(port.shape.size()) + ", got rank " +
                                   std::to_string(it->shape.size())};
        for (std::size_t d = 0; d < port.shape.size(); ++d) {
            if (port.shape[d] != kWildcard && port.shape[d] != it->shape[d])
                throw RequestError{422, it->path + ".shape[" + std::to_string(d) + "]",
                                   label + ": dim " + std::to_string(d) + " is " + std::to_string(it->shape[d]) +
                                       ", expected " + std::to_string(port.shape[d])};
        }
        tensors.emplace_back(it->shape, f32_from_le_bytes(it->payload));
    }
    return tensors;
}

}  // namespace

std::string encode_infer_request(const std::vector<NamedTensor>& inputs) {
    json j;
    j["inputs"] = json::array();
    for (const auto& in : inputs) j["inputs"].push_back(tensor_to_json(in.name, in.tensor));
    return j.dump();
}

InferResponse decode_infer_response(const std::string& body) {
    json root;
    try {
        root = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("invalid JSON: ") + e.what());
    }
    InferResponse resp;
    const auto& outs = get_array(root, "outputs", "");
    for (std::size_t i = 0; i < outs.size(); ++i) {
        const auto path = index_path("outputs", i);
        Shape shape;
        for (const auto& d : get_array(outs[i], "shape", path)) shape.push_back(d.get<std::int64_t>());
        const auto bytes = base64_decode(get_string(outs[i], "data", path));
        resp.outputs.push_back({get_string(outs[i], "name", path), Tensor(shape, f32_from_le_bytes(bytes))});
    }
    resp.latency_us = get_number(root, "latency_us", "");
    if (root.contains("profile")) {
        const auto& rows = get_array(root, "profile", "");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto path = index_path("profile", i);
            NodeRecord r;
            r.id = static_cast<int>(get_int(rows[i], "node_id", path));
            r.name = get_string(rows[i], "name", path);
            r.op = parse_op(get_string(rows[i], "op", path));
            r.latency_ns = static_cast<std::int64_t>(get_number(rows[i], "latency_us", path) * 1000.0);
            resp.profile.push_back(std::move(r));
        }
    }
    return resp;
}

InferenceService::InferenceService(std::shared_ptr<const ServiceRuntime> runtime, bool always_profile)
    : runtime_(std::move(runtime)),
      manifest_text_(serialize_manifest(runtime_->manifest())),
      always_profile_(always_profile) {}

Reply InferenceService::handle_infer(const std::string& body, bool profile) const {
    const ServiceManifest& m = runtime_->manifest();
    try {
        std::vector<Tensor> inputs;
        try {
            inputs = bind_inputs(m.inputs, decode_request(body));
        } catch (const ParseError& e) {
            return error_reply({400, e.path(), e.what()});
        }

        const bool want_profile = (profile || always_profile_) && runtime_->graph() != nullptr;
        const auto t0 = std::chrono::steady_clock::now();
        ServiceRun run;
        try {
            run = runtime_->run(inputs, want_profile);
        } catch (const ValidationError& e) {
            return error_reply({422, "inputs", e.what()});
        }
        const auto t1 = std::chrono::steady_clock::now();

        json j;
        j["outputs"] = json::array();
        for (std::size_t i = 0; i < run.outputs.size(); ++i)
            j["outputs"].push_back(tensor_to_json(m.outputs.ports[i].name, run.outputs[i]));
        j["latency_us"] = static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()) / 1000.0;
        if (want_profile && run.profile) {
            j["profile"] = json::array();
            for (const auto& r : run.profile->records) j["profile"].push_back(record_to_json(r));
        }
        return {200, j.dump() + "\n"};
    } catch (const RequestError& e) {
        return error_reply(e);
    } catch (const std::exception& e) {
        return error_reply({500, "", e.what()});
    }
}

// ---------------------------------------------------------------------------

struct InferenceServer::Impl {
    std::shared_ptr<const InferenceService> service;
    httplib::Server server;
};

InferenceServer::InferenceServer(std::shared_ptr<const InferenceService> service) : impl_(std::make_unique<Impl>()) {
    impl_->service = std::move(service);
    auto& svr = impl_->server;
    detail::exclusive_port(svr);
    auto svc = impl_->service;
    svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    svr.Get("/v1/manifest", [svc](const httplib::Request&, httplib::Response& res) {
        res.set_content(svc->manifest_text(), "application/json");
    });
    svr.Post("/v1/infer", [svc](const httplib::Request& req, httplib::Response& res) {
        const bool profile = req.has_param("profile") && req.get_param_value("profile") == "1";
        Reply reply = svc->handle_infer(req.body, profile);
        res.status = reply.status;
        res.set_content(reply.body, reply.content_type);
    });
}

InferenceServer::~InferenceServer() { stop(); }

int InferenceServer::start(const std::string& host, int port) {
    auto& svr = impl_->server;
    int bound = port;
    if (port == 0) {
        bound = svr.bind_to_any_port(host);
        if (bound < 0) throw StartupError("cannot bind inference server on " + host);
    } else if (!svr.bind_to_port(host, port)) {
        throw StartupError("port " + std::to_string(port) + " is in use");
    }
    thread_ = std::thread([&svr] { svr.listen_after_bind(); });
    svr.wait_until_ready();
    return bound;
}

void InferenceServer::serve_forever(const std::string& host, int port) {
    auto& svr = impl_->server;
    if (!svr.bind_to_port(host, port)) throw StartupError("port " + std::to_string(port) + " is in use");
    svr.listen_after_bind();
}

void InferenceServer::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace zoo::serve
