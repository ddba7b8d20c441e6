#pragma once

#include "zoo/graph.hpp"

#include <filesystem>
#include <string>

namespace zoo {

/// JSON form of a graph's structure and parameter slot declarations (no
/// parameter values; those live in a weight container).
std::string graph_to_json(const Graph& graph);
/// Throws ParseError with a field path, or GraphError if the structure is invalid.
Graph graph_from_json(const std::string& text);

void save_graph(const Graph& graph, const std::filesystem::path& path);
Graph load_graph(const std::filesystem::path& path);

}  // namespace zoo
