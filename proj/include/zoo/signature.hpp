#pragma once

#include "zoo/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zoo {

/// Shape pattern dims are positive or kWildcard.
inline constexpr std::int64_t kWildcard = -1;
/// Semantic tag that matches every other tag.
inline constexpr const char* kAnyTag = "any";

struct Port {
    std::string name;
    DType dtype = DType::F32;
    std::vector<std::int64_t> shape;
    std::string tag = kAnyTag;

    bool operator==(const Port&) const = default;
};

/// Ordered list of typed tensor ports.
struct TypeSignature {
    std::vector<Port> ports;

    bool operator==(const TypeSignature&) const = default;
};

/// Throws ValidationError unless ports are non-empty, names unique, and
/// every dim is positive or a wildcard.
void validate_signature(const TypeSignature& sig);

struct CompatDiagnostic {
    /// Positional index of the port pair; -1 for whole-signature problems.
    int port = -1;
    /// "count", "dtype", "tag", "rank" or "dim[i]".
    std::string field;
    std::string reason;
};

struct CompatReport {
    bool compatible = true;
    std::vector<CompatDiagnostic> diagnostics;

    std::string summary() const;
};

/// Compatible iff port counts are equal and, port by port: dtypes equal, tags
/// equal or either is `any`, ranks equal, and each dim pair is equal or has a
/// wildcard on either side.
CompatReport check_compat(const TypeSignature& producer_outputs, const TypeSignature& consumer_inputs);

/// Checks concrete tensors against a signature: count, dtype, rank, dims
/// (wildcards accept any extent). Throws ValidationError naming port and dim.
void check_conforms(const TypeSignature& sig, const std::vector<Tensor>& tensors);

}  // namespace zoo
