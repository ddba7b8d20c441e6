#pragma once

#include "zoo/graph.hpp"
#include "zoo/manifest.hpp"
#include "zoo/rng.hpp"
#include "zoo/store.hpp"
#include "zoo/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

private:
    std::filesystem::path path_;
};

zoo::Tensor random_tensor(const zoo::Shape& shape, zoo::XorShift64Star& rng, float low = -1.0f, float high = 1.0f);

bool bit_equal(const std::vector<zoo::Tensor>& a, const std::vector<zoo::Tensor>& b);

/// A seeded random leaf service: small graph, weights and manifest.
struct Leaf {
    zoo::Graph graph;
    zoo::ParamTable params;
    zoo::ServiceManifest manifest;
};

/// Random small network taking `[-1, dims...]` (rank 2 or 4) and producing
/// a rank 2 or 4 output. Signature ports are concrete apart from the batch.
Leaf random_leaf(zoo::XorShift64Star& rng, const std::string& name, const zoo::Shape& input);

/// Leaf whose input port pattern is `pattern` and output follows from the
/// graph. `pattern` may wildcard any dim; the graph is built for `concrete`.
Leaf random_leaf_with_input(zoo::XorShift64Star& rng, const std::string& name, const zoo::Shape& concrete,
                            const zoo::Shape& pattern, const std::string& tag);

/// Installs a leaf into `store` and returns its manifest.
zoo::ServiceManifest install(const zoo::LocalStore& store, const Leaf& leaf);

/// Seeded LeNet-5 service written to `dir`.
zoo::ServiceManifest lenet_service(const std::filesystem::path& dir, std::uint64_t seed = 42);

std::uint64_t int_in(zoo::XorShift64Star& rng, std::uint64_t lo, std::uint64_t hi);

}  // namespace fixture
