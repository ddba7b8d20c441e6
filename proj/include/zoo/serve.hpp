#pragma once

#include "zoo/compose.hpp"
#include "zoo/manifest.hpp"
#include "zoo/tensor.hpp"

#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace zoo::serve {

/// One tensor in a request or response body:
/// `{"name": ..., "dtype": "f32", "shape": [...], "data": "<base64 LE payload>"}`.
struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// `{"inputs": [<tensor>, ...]}`
std::string encode_infer_request(const std::vector<NamedTensor>& inputs);

struct InferResponse {
    std::vector<NamedTensor> outputs;
    double latency_us = 0.0;
    /// Empty unless profiling was requested for a leaf service.
    std::vector<NodeRecord> profile;
};

/// Parses a 200 response body. Throws ParseError.
InferResponse decode_infer_response(const std::string& body);

struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Transport-independent request handling for one loaded service.
class InferenceService {
public:
    InferenceService(std::shared_ptr<const ServiceRuntime> runtime, bool always_profile = false);

    /// 200 with outputs; 400 for malformed bodies (with the JSON field path);
    /// 422 when inputs violate the input signature; 500 otherwise.
    Reply handle_infer(const std::string& body, bool profile) const;
    const std::string& manifest_text() const noexcept { return manifest_text_; }
    const ServiceRuntime& runtime() const noexcept { return *runtime_; }

private:
    std::shared_ptr<const ServiceRuntime> runtime_;
    std::string manifest_text_;
    bool always_profile_;
};

/// `GET /healthz`, `GET /v1/manifest`, `POST /v1/infer[?profile=1]`.
class InferenceServer {
public:
    explicit InferenceServer(std::shared_ptr<const InferenceService> service);
    ~InferenceServer();
    InferenceServer(const InferenceServer&) = delete;
    InferenceServer& operator=(const InferenceServer&) = delete;

    /// Binds and serves on a background thread; port 0 picks a free port.
    /// Throws StartupError when the port is taken.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    void serve_forever(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
};

}  // namespace zoo::serve
