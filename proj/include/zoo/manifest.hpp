#pragma once

#include "zoo/signature.hpp"

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zoo {

struct SemVer {
    int major = 0;
    int minor = 0;
    int patch = 0;

    /// Accepts exactly MAJOR.MINOR.PATCH with decimal components.
    static SemVer parse(std::string_view text);
    std::string str() const;
    auto operator<=>(const SemVer&) const = default;
};

/// `name@MAJOR.MINOR.PATCH`.
struct ServiceRef {
    std::string name;
    SemVer version;

    static ServiceRef parse(std::string_view text);
    std::string str() const;
    bool operator==(const ServiceRef&) const = default;
};

/// Service names: lowercase letters, digits, '-', '_', '.'; not starting with '.'.
bool valid_service_name(std::string_view name);

struct LeafArtifacts {
    std::string graph = "graph.json";
    std::string weights = "weights.zoow";
    /// Lowercase hex SHA-256 of the weights file.
    std::string sha256;

    bool operator==(const LeafArtifacts&) const = default;
};

struct ServiceManifest {
    std::string name;
    SemVer version;
    std::vector<std::string> authors;
    TypeSignature inputs;
    TypeSignature outputs;
    std::optional<LeafArtifacts> leaf;
    std::optional<std::vector<ServiceRef>> pipeline;
    std::string created;

    bool is_composite() const { return pipeline.has_value(); }
    ServiceRef ref() const { return {name, version}; }
    bool operator==(const ServiceManifest&) const = default;
};

/// Canonical JSON: keys in the order name, version, authors, inputs,
/// outputs, graph, weights, sha256, pipeline, created (absent ones omitted),
/// two-space indent, trailing newline. Equal manifests give equal bytes.
std::string serialize_manifest(const ServiceManifest& m);

/// Throws ParseError with a field path on any missing, ill-typed or unknown
/// field, or on a broken invariant.
ServiceManifest parse_manifest(const std::string& text);

/// `created` value for generated manifests: SOURCE_DATE_EPOCH when set,
/// otherwise the Unix epoch, so generated artifacts are reproducible.
std::string reproducible_timestamp();

}  // namespace zoo
