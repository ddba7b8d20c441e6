#include "zoo/compose.hpp"

#include "zoo/graph_io.hpp"
#include "zoo/hashing.hpp"
#include "zoo/weights.hpp"

#include <algorithm>
#include <set>

namespace fs = std::filesystem;

namespace zoo {

CompositionError::CompositionError(std::size_t stage, std::string producer, std::string consumer,
                                   CompatReport report)
    : Error("cannot compose " + producer + " -> " + consumer + " (stage " + std::to_string(stage) + "): " +
            report.summary()),
      stage_(stage),
      producer_(std::move(producer)),
      consumer_(std::move(consumer)),
      report_(std::move(report)) {}

ServiceManifest compose_sequential(std::string name, const std::vector<ServiceManifest>& services,
                                   std::string created) {
    if (services.size() < 2) throw ValidationError("composition needs at least two services");
    if (!valid_service_name(name)) throw ValidationError("invalid service name '" + name + "'");
    for (std::size_t i = 0; i + 1 < services.size(); ++i) {
        auto report = check_compat(services[i].outputs, services[i + 1].inputs);
        if (!report.compatible)
            throw CompositionError(i, services[i].ref().str(), services[i + 1].ref().str(), std::move(report));
    }

    ServiceManifest m;
    m.name = std::move(name);
    m.version = {0, 1, 0};
    std::set<std::string> seen;
    for (const auto& s : services) {
        for (const auto& a : s.authors) {
            if (seen.insert(a).second) m.authors.push_back(a);
        }
    }
    m.inputs = services.front().inputs;
    m.outputs = services.back().outputs;
    std::vector<ServiceRef> refs;
    for (const auto& s : services) refs.push_back(s.ref());
    m.pipeline = std::move(refs);
    m.created = std::move(created);
    return m;
}

ServiceRuntime::ServiceRuntime(ServiceManifest manifest, const LocalStore& store, std::optional<fs::path> leaf_dir) {
    std::vector<std::string> active;
    *this = ServiceRuntime(std::move(manifest), store, std::move(leaf_dir), active);
}

ServiceRuntime::ServiceRuntime(ServiceManifest manifest, const LocalStore& store, std::optional<fs::path> leaf_dir,
                               std::vector<std::string>& active)
    : manifest_(std::move(manifest)) {
    const std::string self = manifest_.ref().str();
    if (std::find(active.begin(), active.end(), self) != active.end())
        throw ValidationError("pipeline of " + active.front() + " contains itself through " + self);

    if (manifest_.is_composite()) {
        active.push_back(self);
        for (const auto& ref : *manifest_.pipeline) {
            if (!store.contains(ref))
                throw MissingServiceError("service " + ref.str() + " (member of " + self + ") is not in store " +
                                          store.root().string());
            stages_.push_back(std::shared_ptr<const ServiceRuntime>(
                new ServiceRuntime(store.load_manifest(ref), store, std::nullopt, active)));
        }
        active.pop_back();
        return;
    }

    if (!manifest_.leaf) throw ValidationError("manifest of " + self + " has neither a leaf nor a pipeline");
    const fs::path dir = leaf_dir ? *leaf_dir : store.service_dir(manifest_.ref());
    if (!leaf_dir && !store.contains(manifest_.ref()))
        throw MissingServiceError("service " + self + " is not in store " + store.root().string());
    const auto weights_bytes = read_file(dir / manifest_.leaf->weights);
    const auto actual = sha256_hex(weights_bytes);
    if (actual != manifest_.leaf->sha256)
        throw IntegrityError("weights hash mismatch for " + self + ": manifest says " + manifest_.leaf->sha256 +
                             ", file hashes to " + actual);
    Graph graph = load_graph(dir / manifest_.leaf->graph);
    if (graph.inputs().size() != manifest_.inputs.ports.size() ||
        graph.outputs().size() != manifest_.outputs.ports.size())
        throw ValidationError("graph of " + self + " has " + std::to_string(graph.inputs().size()) + " inputs and " +
                              std::to_string(graph.outputs().size()) + " outputs, manifest declares " +
                              std::to_string(manifest_.inputs.ports.size()) + " and " +
                              std::to_string(manifest_.outputs.ports.size()));
    graph_ = std::make_shared<const Graph>(graph.with_params(decode_weights(weights_bytes)));
}

ServiceRun ServiceRuntime::run_leaf(const std::vector<Tensor>& inputs, bool profile) const {
    std::map<std::string, Tensor> feed;
    for (std::size_t i = 0; i < inputs.size(); ++i) feed.emplace(graph_->inputs()[i].name, inputs[i]);
    auto result = execute(*graph_, feed, profile);
    ServiceRun run;
    run.outputs = ordered_outputs(*graph_, result);
    run.profile = std::move(result.report);
    try {
        check_conforms(manifest_.outputs, run.outputs);
    } catch (const ValidationError& e) {
        throw ExecutionError(manifest_.ref().str() + " produced outputs outside its signature: " + e.what());
    }
    return run;
}

ServiceRun ServiceRuntime::run(const std::vector<Tensor>& inputs, bool profile) const {
    check_conforms(manifest_.inputs, inputs);
    if (graph_) return run_leaf(inputs, profile);

    ServiceRun run;
    if (profile) run.profile.emplace();
    std::vector<Tensor> current = inputs;
    for (std::size_t i = 0; i < stages_.size(); ++i) {
        ServiceRun step;
        try {
            step = stages_[i]->run(current, profile);
        } catch (const Error& e) {
            throw StageError(i, stages_[i]->manifest().ref().str(), e.what());
        }
        if (profile && step.profile) {
            if (run.profile->records.empty()) run.profile->started = step.profile->started;
            for (auto& r : step.profile->records) run.profile->records.push_back(std::move(r));
            run.profile->total_ns += step.profile->total_ns;
        }
        current = std::move(step.outputs);
    }
    run.outputs = std::move(current);
    return run;
}

ServiceRun run_service(const ServiceManifest& manifest, const std::vector<Tensor>& inputs, const LocalStore& store,
                       bool profile) {
    return ServiceRuntime(manifest, store).run(inputs, profile);
}

}  // namespace zoo
