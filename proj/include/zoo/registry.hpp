#pragma once

#include "zoo/manifest.hpp"
#include "zoo/store.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace zoo::registry {

/// Where services are shared. `http://host[:port][/prefix]`, or a
/// directory given as `file:///abs/path` or a plain path. Both expose files
/// at `{base}/services/{name}/{version}/{file}`.
class Endpoint {
public:
    /// Throws ValidationError on anything else.
    static Endpoint parse(const std::string& text);

    bool is_http() const noexcept { return http_; }
    const std::string& host() const noexcept { return host_; }
    int port() const noexcept { return port_; }
    const std::string& prefix() const noexcept { return prefix_; }
    const std::filesystem::path& directory() const noexcept { return directory_; }
    const std::string& text() const noexcept { return text_; }

    /// Path relative to the base for one service file.
    static std::string file_path(const ServiceRef& ref, const std::string& file);

private:
    bool http_ = false;
    std::string host_;
    int port_ = 80;
    std::string prefix_;
    std::filesystem::path directory_;
    std::string text_;
};

/// Moves bytes to and from an endpoint.
class Transport {
public:
    virtual ~Transport() = default;
    /// nullopt when the file does not exist (HTTP 404); throws IoError otherwise.
    virtual std::optional<std::vector<std::uint8_t>> get(const std::string& path) = 0;
    /// Throws PublishError on rejection.
    virtual void put(const std::string& path, const std::vector<std::uint8_t>& bytes) = 0;
};

std::unique_ptr<Transport> make_transport(const Endpoint& endpoint);

struct Receipt {
    std::string name;
    std::string version;
    std::string sha256;
};

/// Validates `service_dir` locally, then uploads every file. Nothing is sent
/// if validation fails.
Receipt publish(const std::filesystem::path& service_dir, const Endpoint& endpoint);

/// Downloads `ref` (and, for pipelines, every member transitively) into
/// `store`. Already-installed intact services cause no traffic. Weights are
/// hash-checked before anything is installed.
std::filesystem::path pull(const ServiceRef& ref, const Endpoint& endpoint, const LocalStore& store);
std::filesystem::path pull(const ServiceRef& ref, Transport& transport, const LocalStore& store);

/// Minimal HTTP registry over a directory: GET and PUT under /services/.
/// Serves on a background thread until stopped or destroyed.
class RegistryServer {
public:
    explicit RegistryServer(std::filesystem::path root);
    ~RegistryServer();
    RegistryServer(const RegistryServer&) = delete;
    RegistryServer& operator=(const RegistryServer&) = delete;

    /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
    /// Throws StartupError when the port is taken.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Blocks serving on the calling thread (for the CLI).
    void serve_forever(const std::string& host, int port);
    void stop();

    std::string base_url() const;
    std::uint64_t request_count() const noexcept { return requests_.load(); }
    void reset_request_count() noexcept { requests_ = 0; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::atomic<std::uint64_t> requests_{0};
    std::thread thread_;
    std::string host_;
    int port_ = 0;
};

}  // namespace zoo::registry
