#pragma once

#include "zoo/graph.hpp"
#include "zoo/manifest.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace zoo {

inline constexpr const char* kManifestFile = "manifest.json";

/// Files making up one service, keyed by file name.
using ServiceFiles = std::map<std::string, std::vector<std::uint8_t>>;

/// Reads `<dir>/manifest.json` (or `path` itself when it names a file).
ServiceManifest read_manifest(const std::filesystem::path& path);

/// Checks that the manifest parses, every referenced file exists and the
/// weights hash matches. Throws ParseError/ValidationError/IntegrityError.
ServiceManifest validate_service_dir(const std::filesystem::path& dir);

/// File names a manifest refers to, manifest first.
std::vector<std::string> service_file_names(const ServiceManifest& m);

/// Writes `m` canonically as `<dir>/manifest.json`, creating `dir`.
void write_manifest(const std::filesystem::path& dir, const ServiceManifest& m);

/// Packages a leaf service: writes graph and weights into `dir`, fills in
/// `m.leaf` with the weights hash, then writes the manifest.
ServiceManifest write_leaf_service(const std::filesystem::path& dir, ServiceManifest m, const Graph& graph,
                                   const ParamTable& params);

/// Content-addressed local store laid out as
/// `<root>/<name>/<version>/{manifest.json, graph.json, weights.zoow}`.
/// Installs go through a staging directory and a rename, so a partially
/// written service is never visible under its final path.
class LocalStore {
public:
    explicit LocalStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path service_dir(const ServiceRef& ref) const;

    bool contains(const ServiceRef& ref) const;
    /// Present, manifest parses, and for leaf services the weights hash matches.
    bool intact(const ServiceRef& ref) const;

    ServiceManifest load_manifest(const ServiceRef& ref) const;
    std::vector<SemVer> versions(std::string_view name) const;

    /// `version_req` is an exact `x.y.z` or `latest`. Throws MissingServiceError.
    ServiceManifest resolve(std::string_view name, std::string_view version_req) const;
    ServiceManifest resolve(const ServiceRef& ref) const { return resolve(ref.name, ref.version.str()); }

    /// Verifies and installs `files` (which must contain manifest.json).
    /// Throws IntegrityError without touching the store on hash mismatch.
    std::filesystem::path install(const ServiceFiles& files) const;
    /// Copies a validated service directory into the store.
    std::filesystem::path install_dir(const std::filesystem::path& dir) const;

    /// Walks the store and returns one message per broken service.
    std::vector<std::string> audit() const;

private:
    std::filesystem::path root_;
};

}  // namespace zoo
