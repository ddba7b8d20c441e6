#include "zoo/store.hpp"

#include "zoo/error.hpp"
#include "zoo/graph_io.hpp"
#include "zoo/hashing.hpp"
#include "zoo/weights.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <random>
#include <system_error>

#include <unistd.h>

namespace fs = std::filesystem;

namespace zoo {
namespace {

std::string text_of(const std::vector<std::uint8_t>& bytes) { return std::string(bytes.begin(), bytes.end()); }

std::string staging_suffix() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    return std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + std::to_string(rd());
}

}  // namespace

ServiceManifest read_manifest(const fs::path& path) {
    const fs::path file = fs::is_directory(path) ? path / kManifestFile : path;
    if (!fs::exists(file)) throw IoError("no manifest at " + file.string());
    return parse_manifest(text_of(read_file(file)));
}

std::vector<std::string> service_file_names(const ServiceManifest& m) {
    std::vector<std::string> names{kManifestFile};
    if (m.leaf) {
        names.push_back(m.leaf->graph);
        names.push_back(m.leaf->weights);
    }
    return names;
}

ServiceManifest validate_service_dir(const fs::path& dir) {
    ServiceManifest m = read_manifest(dir);
    for (const auto& name : service_file_names(m)) {
        if (!fs::is_regular_file(dir / name))
            throw ValidationError("service " + m.ref().str() + " is missing file " + name);
    }
    if (m.leaf) {
        const auto actual = sha256_file(dir / m.leaf->weights);
        if (actual != m.leaf->sha256)
            throw IntegrityError("weights hash mismatch for " + m.ref().str() + ": manifest says " + m.leaf->sha256 +
                                 ", file hashes to " + actual);
    }
    return m;
}

void write_manifest(const fs::path& dir, const ServiceManifest& m) {
    fs::create_directories(dir);
    const auto text = serialize_manifest(m);
    write_file(dir / kManifestFile, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ServiceManifest write_leaf_service(const fs::path& dir, ServiceManifest m, const Graph& graph,
                                   const ParamTable& params) {
    fs::create_directories(dir);
    LeafArtifacts leaf;
    save_graph(graph, dir / leaf.graph);
    save_weights(params, dir / leaf.weights);
    leaf.sha256 = sha256_file(dir / leaf.weights);
    m.leaf = leaf;
    m.pipeline.reset();
    write_manifest(dir, m);
    return m;
}

LocalStore::LocalStore(fs::path root) : root_(std::move(root)) {}

fs::path LocalStore::service_dir(const ServiceRef& ref) const { return root_ / ref.name / ref.version.str(); }

bool LocalStore::contains(const ServiceRef& ref) const {
    return fs::is_regular_file(service_dir(ref) / kManifestFile);
}

bool LocalStore::intact(const ServiceRef& ref) const {
    if (!contains(ref)) return false;
    try {
        const auto m = validate_service_dir(service_dir(ref));
        return m.ref() == ref;
    } catch (const Error&) {
        return false;
    }
}

ServiceManifest LocalStore::load_manifest(const ServiceRef& ref) const {
    if (!contains(ref)) throw MissingServiceError("service " + ref.str() + " is not in store " + root_.string());
    return read_manifest(service_dir(ref));
}

std::vector<SemVer> LocalStore::versions(std::string_view name) const {
    std::vector<SemVer> out;
    const fs::path dir = root_ / std::string(name);
    std::error_code ec;
    if (!valid_service_name(name) || !fs::is_directory(dir, ec)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_directory() || !fs::is_regular_file(entry.path() / kManifestFile)) continue;
        try {
            out.push_back(SemVer::parse(entry.path().filename().string()));
        } catch (const ParseError&) {
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

ServiceManifest LocalStore::resolve(std::string_view name, std::string_view version_req) const {
    const auto available = versions(name);
    if (version_req == "latest") {
        if (available.empty()) throw MissingServiceError("no versions of '" + std::string(name) + "' in store");
        return load_manifest({std::string(name), available.back()});
    }
    SemVer wanted;
    try {
        wanted = SemVer::parse(version_req);
    } catch (const ParseError& e) {
        throw ValidationError("version requirement must be x.y.z or 'latest': " + std::string(e.what()));
    }
    if (std::find(available.begin(), available.end(), wanted) == available.end())
        throw MissingServiceError("service " + std::string(name) + "@" + wanted.str() + " is not in store");
    return load_manifest({std::string(name), wanted});
}

fs::path LocalStore::install(const ServiceFiles& files) const {
    auto mit = files.find(kManifestFile);
    if (mit == files.end()) throw ValidationError("service files lack manifest.json");
    const ServiceManifest m = parse_manifest(text_of(mit->second));
    for (const auto& name : service_file_names(m)) {
        if (!files.contains(name)) throw ValidationError("service " + m.ref().str() + " is missing file " + name);
    }
    if (m.leaf) {
        const auto actual = sha256_hex(files.at(m.leaf->weights));
        if (actual != m.leaf->sha256)
            throw IntegrityError("weights hash mismatch for " + m.ref().str() + ": manifest says " + m.leaf->sha256 +
                                 ", received bytes hash to " + actual);
    }

    const fs::path target = service_dir(m.ref());
    if (intact(m.ref()) && read_manifest(target) == m) return target;

    const fs::path staging_root = root_ / ".staging";
    fs::create_directories(staging_root);
    const fs::path staging = staging_root / (m.name + "-" + m.version.str() + "-" + staging_suffix());
    fs::create_directories(staging);
    try {
        for (const auto& name : service_file_names(m)) write_file(staging / name, files.at(name));
        fs::create_directories(target.parent_path());
        std::error_code ec;
        fs::rename(staging, target, ec);
        if (ec) {
            // Target exists: keep it if a concurrent install already put the
            // same service there, otherwise replace it.
            if (intact(m.ref()) && read_manifest(target) == m) {
                fs::remove_all(staging);
                return target;
            }
            fs::remove_all(target);
            fs::rename(staging, target);
        }
    } catch (...) {
        std::error_code ignore;
        fs::remove_all(staging, ignore);
        throw;
    }
    return target;
}

fs::path LocalStore::install_dir(const fs::path& dir) const {
    const ServiceManifest m = validate_service_dir(dir);
    ServiceFiles files;
    for (const auto& name : service_file_names(m)) files.emplace(name, read_file(dir / name));
    return install(files);
}

std::vector<std::string> LocalStore::audit() const {
    std::vector<std::string> problems;
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) return problems;
    for (const auto& name_dir : fs::directory_iterator(root_)) {
        const auto name = name_dir.path().filename().string();
        if (!name_dir.is_directory() || name.starts_with(".")) continue;
        for (const auto& ver_dir : fs::directory_iterator(name_dir.path())) {
            const auto where = name + "@" + ver_dir.path().filename().string();
            try {
                const auto m = validate_service_dir(ver_dir.path());
                if (m.name != name || m.version.str() != ver_dir.path().filename().string())
                    problems.push_back(where + ": manifest identifies as " + m.ref().str());
            } catch (const Error& e) {
                problems.push_back(where + ": " + e.what());
            }
        }
    }
    return problems;
}

}  // namespace zoo
