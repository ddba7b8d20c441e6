#include "zoo/registry.hpp"

#include "detail/http_server.hpp"
#include "zoo/error.hpp"
#include "zoo/weights.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace fs = std::filesystem;

namespace zoo::registry {
namespace {

std::string text_of(const std::vector<std::uint8_t>& bytes) { return std::string(bytes.begin(), bytes.end()); }

bool is_2xx(int status) { return status >= 200 && status < 300; }

// Accepts only `name/version/file` style relative paths without `..`.
bool safe_relative(const std::string& path) {
    if (path.empty() || path.front() == '/') return false;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto end = std::min(path.find('/', start), path.size());
        const auto seg = path.substr(start, end - start);
        if (seg.empty() || seg == "." || seg == ".." || seg.find('\\') != std::string::npos) return false;
        start = end + 1;
    }
    return true;
}

void write_atomically(const fs::path& target, const std::vector<std::uint8_t>& bytes) {
    fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".part";
    write_file(tmp, bytes);
    fs::rename(tmp, target);
}

class HttpTransport final : public Transport {
public:
    explicit HttpTransport(const Endpoint& ep) : client_(ep.host(), ep.port()), prefix_(ep.prefix()) {
        client_.set_connection_timeout(10);
        client_.set_read_timeout(120);
        client_.set_write_timeout(120);
    }

    std::optional<std::vector<std::uint8_t>> get(const std::string& path) override {
        const auto url = prefix_ + "/" + path;
        auto res = client_.Get(url);
        if (!res) throw IoError("GET " + url + " failed: " + httplib::to_string(res.error()));
        if (res->status == 404) return std::nullopt;
        if (!is_2xx(res->status)) throw IoError("GET " + url + " returned HTTP " + std::to_string(res->status));
        return std::vector<std::uint8_t>(res->body.begin(), res->body.end());
    }

    void put(const std::string& path, const std::vector<std::uint8_t>& bytes) override {
        const auto url = prefix_ + "/" + path;
        auto res = client_.Put(url, reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                               "application/octet-stream");
        if (!res) throw IoError("PUT " + url + " failed: " + httplib::to_string(res.error()));
        if (!is_2xx(res->status)) throw PublishError("PUT " + url + " rejected", res->status);
    }

private:
    httplib::Client client_;
    std::string prefix_;
};

class FileTransport final : public Transport {
public:
    explicit FileTransport(fs::path root) : root_(std::move(root)) {}

    std::optional<std::vector<std::uint8_t>> get(const std::string& path) override {
        const fs::path file = root_ / path;
        if (!fs::is_regular_file(file)) return std::nullopt;
        return read_file(file);
    }

    void put(const std::string& path, const std::vector<std::uint8_t>& bytes) override {
        try {
            write_atomically(root_ / path, bytes);
        } catch (const fs::filesystem_error& e) {
            throw IoError(std::string("cannot write to registry: ") + e.what());
        }
    }

private:
    fs::path root_;
};

fs::path pull_impl(const ServiceRef& ref, Transport& transport, const LocalStore& store,
                   std::set<std::string>& active) {
    if (!active.insert(ref.str()).second) throw ValidationError("pipeline cycle through " + ref.str());

    if (store.intact(ref)) {
        const auto m = store.load_manifest(ref);
        if (m.pipeline) {
            for (const auto& member : *m.pipeline) pull_impl(member, transport, store, active);
        }
        active.erase(ref.str());
        return store.service_dir(ref);
    }

    auto manifest_bytes = transport.get(Endpoint::file_path(ref, kManifestFile));
    if (!manifest_bytes) throw NotFoundError("service " + ref.str() + " not found in registry");
    const ServiceManifest m = parse_manifest(text_of(*manifest_bytes));
    if (m.ref() != ref)
        throw IntegrityError("registry returned manifest for " + m.ref().str() + " when asked for " + ref.str());

    ServiceFiles files;
    files.emplace(kManifestFile, std::move(*manifest_bytes));
    if (m.pipeline) {
        for (const auto& member : *m.pipeline) pull_impl(member, transport, store, active);
    } else {
        for (const auto& name : {m.leaf->graph, m.leaf->weights}) {
            auto bytes = transport.get(Endpoint::file_path(ref, name));
            if (!bytes) throw NotFoundError("service " + ref.str() + " has no " + name + " in registry");
            files.emplace(name, std::move(*bytes));
        }
    }
    auto dir = store.install(files);
    active.erase(ref.str());
    return dir;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
    Endpoint ep;
    ep.text_ = text;
    if (text.starts_with("http://")) {
        std::string rest = text.substr(7);
        const auto slash = rest.find('/');
        std::string authority = rest.substr(0, slash);
        if (slash != std::string::npos) ep.prefix_ = rest.substr(slash);
        while (!ep.prefix_.empty() && ep.prefix_.back() == '/') ep.prefix_.pop_back();
        const auto colon = authority.rfind(':');
        if (colon != std::string::npos) {
            const auto port_text = authority.substr(colon + 1);
            try {
                std::size_t used = 0;
                ep.port_ = std::stoi(port_text, &used);
                if (used != port_text.size() || ep.port_ < 1 || ep.port_ > 65535) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw ValidationError("invalid port in registry URL '" + text + "'");
            }
            authority = authority.substr(0, colon);
        }
        if (authority.empty()) throw ValidationError("registry URL '" + text + "' has no host");
        ep.host_ = authority;
        ep.http_ = true;
        return ep;
    }
    if (text.starts_with("file://")) {
        const std::string path = text.substr(7);
        if (path.empty() || path.front() != '/')
            throw ValidationError("file registry URL must be absolute: '" + text + "'");
        ep.directory_ = path;
        return ep;
    }
    if (text.find("://") != std::string::npos)
        throw ValidationError("unsupported registry scheme in '" + text + "' (use http:// or file://)");
    if (text.empty()) throw ValidationError("empty registry location");
    ep.directory_ = fs::absolute(text);
    return ep;
}

std::string Endpoint::file_path(const ServiceRef& ref, const std::string& file) {
    return "services/" + ref.name + "/" + ref.version.str() + "/" + file;
}

std::unique_ptr<Transport> make_transport(const Endpoint& endpoint) {
    if (endpoint.is_http()) return std::make_unique<HttpTransport>(endpoint);
    return std::make_unique<FileTransport>(endpoint.directory());
}

Receipt publish(const fs::path& service_dir, const Endpoint& endpoint) {
    const ServiceManifest m = validate_service_dir(service_dir);
    auto transport = make_transport(endpoint);
    for (const auto& name : service_file_names(m))
        transport->put(Endpoint::file_path(m.ref(), name), read_file(service_dir / name));
    return {m.name, m.version.str(), m.leaf ? m.leaf->sha256 : std::string()};
}

fs::path pull(const ServiceRef& ref, Transport& transport, const LocalStore& store) {
    std::set<std::string> active;
    return pull_impl(ref, transport, store, active);
}

fs::path pull(const ServiceRef& ref, const Endpoint& endpoint, const LocalStore& store) {
    auto transport = make_transport(endpoint);
    return pull(ref, *transport, store);
}

// ---------------------------------------------------------------------------

struct RegistryServer::Impl {
    fs::path root;
    httplib::Server server;
};

RegistryServer::RegistryServer(fs::path root) : impl_(std::make_unique<Impl>()) {
    impl_->root = std::move(root);
    auto& svr = impl_->server;
    detail::exclusive_port(svr);
    svr.set_pre_routing_handler([this](const httplib::Request&, httplib::Response&) {
        ++requests_;
        return httplib::Server::HandlerResponse::Unhandled;
    });
    svr.Get(R"(/services/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string rel = req.matches[1];
        const fs::path file = impl_->root / "services" / rel;
        if (!safe_relative(rel) || !fs::is_regular_file(file)) {
            res.status = 404;
            res.set_content("not found", "text/plain");
            return;
        }
        const auto bytes = read_file(file);
        res.set_content(std::string(bytes.begin(), bytes.end()), "application/octet-stream");
    });
    svr.Put(R"(/services/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string rel = req.matches[1];
        if (!safe_relative(rel)) {
            res.status = 400;
            res.set_content("bad path", "text/plain");
            return;
        }
        try {
            write_atomically(impl_->root / "services" / rel, std::vector<std::uint8_t>(req.body.begin(), req.body.end()));
            res.status = 201;
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(e.what(), "text/plain");
        }
    });
}

RegistryServer::~RegistryServer() { stop(); }

int RegistryServer::start(const std::string& host, int port) {
    auto& svr = impl_->server;
    host_ = host;
    if (port == 0) {
        port_ = svr.bind_to_any_port(host);
        if (port_ < 0) throw StartupError("cannot bind registry server on " + host);
    } else {
        if (!svr.bind_to_port(host, port)) throw StartupError("port " + std::to_string(port) + " is in use");
        port_ = port;
    }
    thread_ = std::thread([&svr] { svr.listen_after_bind(); });
    svr.wait_until_ready();
    return port_;
}

void RegistryServer::serve_forever(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    auto& svr = impl_->server;
    if (!svr.bind_to_port(host, port)) throw StartupError("port " + std::to_string(port) + " is in use");
    svr.listen_after_bind();
}

void RegistryServer::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

std::string RegistryServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace zoo::registry
