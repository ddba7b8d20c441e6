#include "zoo/signature.hpp"

#include "zoo/error.hpp"

#include <set>

namespace zoo {

void validate_signature(const TypeSignature& sig) {
    if (sig.ports.empty()) throw ValidationError("signature needs at least one port");
    std::set<std::string, std::less<>> names;
    for (std::size_t i = 0; i < sig.ports.size(); ++i) {
        const Port& p = sig.ports[i];
        if (p.name.empty()) throw ValidationError("port " + std::to_string(i) + " has an empty name");
        if (!names.insert(p.name).second) throw ValidationError("duplicate port name '" + p.name + "'");
        if (p.shape.empty() || p.shape.size() > 4)
            throw ValidationError("port '" + p.name + "' rank must be in 1..4");
        for (std::size_t d = 0; d < p.shape.size(); ++d) {
            if (p.shape[d] <= 0 && p.shape[d] != kWildcard)
                throw ValidationError("port '" + p.name + "' dim " + std::to_string(d) + " must be positive or -1");
        }
        if (p.tag.empty()) throw ValidationError("port '" + p.name + "' has an empty tag");
    }
}

std::string CompatReport::summary() const {
    if (compatible) return "compatible";
    std::string out = "incompatible";
    for (const auto& d : diagnostics) {
        out += "; ";
        if (d.port >= 0) out += "port " + std::to_string(d.port) + " ";
        out += d.field + ": " + d.reason;
    }
    return out;
}

CompatReport check_compat(const TypeSignature& producer, const TypeSignature& consumer) {
    CompatReport report;
    auto fail = [&](int port, std::string field, std::string reason) {
        report.compatible = false;
        report.diagnostics.push_back({port, std::move(field), std::move(reason)});
    };

    if (producer.ports.size() != consumer.ports.size())
        fail(-1, "count",
             "producer has " + std::to_string(producer.ports.size()) + " output ports, consumer expects " +
                 std::to_string(consumer.ports.size()));

    const std::size_t pairs = std::min(producer.ports.size(), consumer.ports.size());
    for (std::size_t i = 0; i < pairs; ++i) {
        const Port& out = producer.ports[i];
        const Port& in = consumer.ports[i];
        const int port = static_cast<int>(i);
        const std::string pair = "'" + out.name + "' -> '" + in.name + "'";
        if (out.dtype != in.dtype)
            fail(port, "dtype",
                 pair + ": " + std::string(dtype_name(out.dtype)) + " vs " + std::string(dtype_name(in.dtype)));
        if (out.tag != in.tag && out.tag != kAnyTag && in.tag != kAnyTag)
            fail(port, "tag", pair + ": '" + out.tag + "' vs '" + in.tag + "'");
        if (out.shape.size() != in.shape.size()) {
            fail(port, "rank",
                 pair + ": rank " + std::to_string(out.shape.size()) + " vs " + std::to_string(in.shape.size()));
            continue;
        }
        for (std::size_t d = 0; d < out.shape.size(); ++d) {
            const auto a = out.shape[d], b = in.shape[d];
            if (a != b && a != kWildcard && b != kWildcard)
                fail(port, "dim[" + std::to_string(d) + "]",
                     pair + ": " + std::to_string(a) + " vs " + std::to_string(b));
        }
    }
    return report;
}

void check_conforms(const TypeSignature& sig, const std::vector<Tensor>& tensors) {
    if (tensors.size() != sig.ports.size())
        throw ValidationError("expected " + std::to_string(sig.ports.size()) + " tensors, got " +
                              std::to_string(tensors.size()));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const Port& p = sig.ports[i];
        const Tensor& t = tensors[i];
        const std::string label = "port " + std::to_string(i) + " '" + p.name + "'";
        if (t.empty()) throw ValidationError(label + ": missing tensor");
        if (t.dtype() != p.dtype)
            throw ValidationError(label + ": dtype " + std::string(dtype_name(t.dtype())) + ", expected " +
                                  std::string(dtype_name(p.dtype)));
        if (t.rank() != static_cast<std::int64_t>(p.shape.size()))
            throw ValidationError(label + ": expected rank " + std::to_string(p.shape.size()) + ", got rank " +
                                  std::to_string(t.rank()) + " (shape " + shape_to_string(t.shape()) + ")");
        for (std::size_t d = 0; d < p.shape.size(); ++d) {
            if (p.shape[d] != kWildcard && p.shape[d] != t.dim(d))
                throw ValidationError(label + ": dim " + std::to_string(d) + " is " + std::to_string(t.dim(d)) +
                                      ", expected " + std::to_string(p.shape[d]));
        }
    }
}

}  // namespace zoo
