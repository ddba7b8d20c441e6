#pragma once

#include "zoo/error.hpp"
#include "zoo/executor.hpp"
#include "zoo/graph.hpp"
#include "zoo/manifest.hpp"
#include "zoo/signature.hpp"
#include "zoo/store.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace zoo {

/// Adjacent services in a pipeline do not fit together.
class CompositionError : public Error {
public:
    CompositionError(std::size_t stage, std::string producer, std::string consumer, CompatReport report);

    /// Index of the producing service; the consumer is stage + 1.
    std::size_t stage() const noexcept { return stage_; }
    const std::string& producer() const noexcept { return producer_; }
    const std::string& consumer() const noexcept { return consumer_; }
    const CompatReport& report() const noexcept { return report_; }

private:
    std::size_t stage_;
    std::string producer_;
    std::string consumer_;
    CompatReport report_;
};

/// A failure inside one pipeline stage.
class StageError : public ExecutionError {
public:
    StageError(std::size_t stage, const std::string& service, const std::string& what)
        : ExecutionError("stage " + std::to_string(stage) + " (" + service + "): " + what), stage_(stage) {}
    std::size_t stage() const noexcept { return stage_; }

private:
    std::size_t stage_;
};

/// Chains `services` left to right. Requires at least two services, each
/// adjacent pair compatible. The result takes the first service's inputs
/// and the last one's outputs, version 0.1.0, and lists the members as
/// `name@version` references.
ServiceManifest compose_sequential(std::string name, const std::vector<ServiceManifest>& services,
                                   std::string created = reproducible_timestamp());

struct ServiceRun {
    std::vector<Tensor> outputs;
    /// Leaf services: one report. Pipelines: stage reports concatenated.
    std::optional<ProfileReport> profile;
};

/// A service with every stage loaded: graphs parsed and weights read (and
/// hash-checked) once, then shared read-only by all runs.
class ServiceRuntime {
public:
    /// Pipeline members resolve through `store`. A leaf is read from
    /// `leaf_dir` when given, otherwise from its store directory.
    ServiceRuntime(ServiceManifest manifest, const LocalStore& store,
                   std::optional<std::filesystem::path> leaf_dir = std::nullopt);

    const ServiceManifest& manifest() const noexcept { return manifest_; }
    /// Bound graph of a leaf service, null for pipelines.
    const Graph* graph() const noexcept { return graph_.get(); }

    /// Inputs are positional per the input signature. Throws
    /// ValidationError when they do not conform, StageError for failures
    /// inside a pipeline stage.
    ServiceRun run(const std::vector<Tensor>& inputs, bool profile = false) const;

private:
    ServiceRuntime(ServiceManifest manifest, const LocalStore& store, std::optional<std::filesystem::path> leaf_dir,
                   std::vector<std::string>& active);
    ServiceRun run_leaf(const std::vector<Tensor>& inputs, bool profile) const;

    ServiceManifest manifest_;
    std::shared_ptr<const Graph> graph_;
    std::vector<std::shared_ptr<const ServiceRuntime>> stages_;
};

ServiceRun run_service(const ServiceManifest& manifest, const std::vector<Tensor>& inputs, const LocalStore& store,
                       bool profile = false);

}  // namespace zoo
