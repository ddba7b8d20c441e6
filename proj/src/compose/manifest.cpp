#include "zoo/manifest.hpp"

#include "zoo/detail/json_fields.hpp"
#include "zoo/error.hpp"

#include <charconv>
#include <cstdlib>
#include <ctime>

namespace zoo {
namespace {

using json = nlohmann::ordered_json;
using namespace detail;

bool is_hex64(std::string_view s) {
    if (s.size() != 64) return false;
    for (char c : s) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

json port_to_json(const Port& p) {
    json j;
    j["name"] = p.name;
    j["dtype"] = dtype_name(p.dtype);
    j["shape"] = p.shape;
    j["tag"] = p.tag;
    return j;
}

json signature_to_json(const TypeSignature& sig) {
    json arr = json::array();
    for (const auto& p : sig.ports) arr.push_back(port_to_json(p));
    return arr;
}

TypeSignature signature_from_json(const json& obj, std::string_view key) {
    const auto& arr = get_array(obj, key, "");
    const std::string base(key);
    TypeSignature sig;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto path = index_path(base, i);
        require_object(arr[i], path);
        reject_unknown(arr[i], {"name", "dtype", "shape", "tag"}, path);
        Port p;
        p.name = get_string(arr[i], "name", path);
        try {
            p.dtype = parse_dtype(get_string(arr[i], "dtype", path));
        } catch (const ParseError& e) {
            if (!e.path().empty()) throw;
            throw ParseError(join_path(path, "dtype"), e.what());
        }
        const auto& dims = get_array(arr[i], "shape", path);
        for (std::size_t d = 0; d < dims.size(); ++d)
            p.shape.push_back(as_int(dims[d], index_path(join_path(path, "shape"), d)));
        p.tag = get_string(arr[i], "tag", path);
        sig.ports.push_back(std::move(p));
    }
    try {
        validate_signature(sig);
    } catch (const ValidationError& e) {
        throw ParseError(base, e.what());
    }
    return sig;
}

int parse_component(std::string_view part, std::string_view whole) {
    int value = 0;
    if (part.empty() || part.size() > 9 || (part.size() > 1 && part[0] == '0') ||
        part.find_first_not_of("0123456789") != std::string_view::npos)
        throw ParseError("", "invalid semantic version '" + std::string(whole) + "'");
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size())
        throw ParseError("", "invalid semantic version '" + std::string(whole) + "'");
    return value;
}

}  // namespace

SemVer SemVer::parse(std::string_view text) {
    const auto a = text.find('.');
    const auto b = a == std::string_view::npos ? a : text.find('.', a + 1);
    if (a == std::string_view::npos || b == std::string_view::npos || text.find('.', b + 1) != std::string_view::npos)
        throw ParseError("", "version '" + std::string(text) + "' is not MAJOR.MINOR.PATCH");
    return {parse_component(text.substr(0, a), text), parse_component(text.substr(a + 1, b - a - 1), text),
            parse_component(text.substr(b + 1), text)};
}

std::string SemVer::str() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

bool valid_service_name(std::string_view name) {
    if (name.empty() || name.size() > 128 || name[0] == '.') return false;
    for (char c : name) {
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.')) return false;
    }
    return true;
}

ServiceRef ServiceRef::parse(std::string_view text) {
    const auto at = text.find('@');
    if (at == std::string_view::npos) throw ParseError("", "service reference '" + std::string(text) + "' lacks '@'");
    ServiceRef ref{std::string(text.substr(0, at)), SemVer::parse(text.substr(at + 1))};
    if (!valid_service_name(ref.name)) throw ParseError("", "invalid service name '" + ref.name + "'");
    return ref;
}

std::string ServiceRef::str() const { return name + "@" + version.str(); }

std::string serialize_manifest(const ServiceManifest& m) {
    json j;
    j["name"] = m.name;
    j["version"] = m.version.str();
    j["authors"] = m.authors;
    j["inputs"] = signature_to_json(m.inputs);
    j["outputs"] = signature_to_json(m.outputs);
    if (m.leaf) {
        j["graph"] = m.leaf->graph;
        j["weights"] = m.leaf->weights;
        j["sha256"] = m.leaf->sha256;
    }
    if (m.pipeline) {
        json refs = json::array();
        for (const auto& r : *m.pipeline) refs.push_back(r.str());
        j["pipeline"] = std::move(refs);
    }
    j["created"] = m.created;
    return j.dump(2) + "\n";
}

ServiceManifest parse_manifest(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("invalid JSON: ") + e.what());
    }
    require_object(j, "");
    reject_unknown(j, {"name", "version", "authors", "inputs", "outputs", "graph", "weights", "sha256", "pipeline", "created"},
                   "");

    ServiceManifest m;
    m.name = get_string(j, "name", "");
    if (!valid_service_name(m.name)) throw ParseError("name", "invalid service name '" + m.name + "'");
    try {
        m.version = SemVer::parse(get_string(j, "version", ""));
    } catch (const ParseError& e) {
        if (!e.path().empty()) throw;
        throw ParseError("version", e.what());
    }
    const auto& authors = get_array(j, "authors", "");
    for (std::size_t i = 0; i < authors.size(); ++i) {
        if (!authors[i].is_string()) throw ParseError(index_path("authors", i), "expected a string");
        m.authors.push_back(authors[i].get<std::string>());
    }
    m.inputs = signature_from_json(j, "inputs");
    m.outputs = signature_from_json(j, "outputs");

    const bool has_graph = j.contains("graph"), has_weights = j.contains("weights"), has_hash = j.contains("sha256");
    const bool has_pipeline = j.contains("pipeline");
    if (has_pipeline && (has_graph || has_weights || has_hash))
        throw ParseError("pipeline", "a manifest has either graph+weights+sha256 or a pipeline, not both");
    if (!has_pipeline && !(has_graph && has_weights && has_hash)) {
        const char* missing = !has_graph ? "graph" : !has_weights ? "weights" : "sha256";
        throw ParseError(missing, "missing field (leaf manifests need graph, weights and sha256)");
    }
    if (has_pipeline) {
        const auto& arr = get_array(j, "pipeline", "");
        if (arr.size() < 2) throw ParseError("pipeline", "a pipeline lists at least two services");
        std::vector<ServiceRef> refs;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto path = index_path("pipeline", i);
            if (!arr[i].is_string()) throw ParseError(path, "expected a string");
            try {
                refs.push_back(ServiceRef::parse(arr[i].get<std::string>()));
            } catch (const ParseError& e) {
                throw ParseError(path, e.what());
            }
        }
        m.pipeline = std::move(refs);
    } else {
        LeafArtifacts leaf;
        leaf.graph = get_string(j, "graph", "");
        leaf.weights = get_string(j, "weights", "");
        leaf.sha256 = get_string(j, "sha256", "");
        for (const auto* f : {&leaf.graph, &leaf.weights}) {
            if (f->empty() || f->find('/') != std::string::npos || f->find('\\') != std::string::npos || *f == "." ||
                *f == "..")
                throw ParseError(f == &leaf.graph ? "graph" : "weights", "must be a plain file name");
        }
        if (!is_hex64(leaf.sha256)) throw ParseError("sha256", "expected 64 lowercase hex characters");
        m.leaf = std::move(leaf);
    }
    m.created = get_string(j, "created", "");
    return m;
}

std::string reproducible_timestamp() {
    std::time_t t = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0) t = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace zoo
