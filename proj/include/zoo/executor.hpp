#pragma once

#include "zoo/graph.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zoo {

/// Deterministic topological order; ties go to the smallest id. Throws
/// GraphError listing one cycle when the nodes do not form a DAG.
std::vector<int> topo_sort(std::span<const Node> nodes);
std::vector<int> topo_sort(const Graph& graph);

/// Output shape of one node from the shapes of its predecessors.
/// Throws ShapeError naming the node and the offending axis.
Shape infer_node_shape(const Node& node, std::span<const Shape> inputs);

/// Shapes of every node, indexed by node id. `input_shapes` is keyed by
/// input port name; the batch dim is carried through unchanged.
std::vector<Shape> infer_shapes(const Graph& graph, const std::map<std::string, Shape>& input_shapes);

struct NodeRecord {
    int id = 0;
    std::string name;
    OpKind op = OpKind::Input;
    std::int64_t latency_ns = 0;
    Shape output_shape;

    double latency_us() const { return static_cast<double>(latency_ns) / 1000.0; }
};

/// Per-node timings for one run. Node latency covers kernel compute only.
struct ProfileReport {
    std::vector<NodeRecord> records;
    std::int64_t total_ns = 0;
    std::chrono::system_clock::time_point started;

    double total_us() const { return static_cast<double>(total_ns) / 1000.0; }
    std::int64_t node_sum_ns() const;
};

struct ExecutionResult {
    /// Keyed by output node name.
    std::map<std::string, Tensor> outputs;
    std::optional<ProfileReport> report;
};

/// Evaluates every node in topological order. Intermediate tensors are
/// released once their last consumer has run.
ExecutionResult execute(const Graph& graph, const std::map<std::string, Tensor>& inputs, bool profile = false);

/// Outputs of `execute` in declared output order.
std::vector<Tensor> ordered_outputs(const Graph& graph, const ExecutionResult& result);

/// `node_id,name,op,latency_us,output_shape` header plus one row per record.
std::string report_to_csv(const ProfileReport& report);

}  // namespace zoo
