#pragma once

#include "gnncf/graph.hpp"

#include <string>

namespace gnncf {

// Plain-text formats:
//  - edge list: one "u v" per line, zero-based decimal ids, u < v, sorted
//  - features:  one node per line, comma-separated decimal reals
//  - labels:    one "node_id label train_flag" per line
// Loaders throw ParseError naming the offending line.

void save_edge_list(const Graph& g, const std::string& path);
Graph load_edge_list(const std::string& path, NodeId node_count);

void save_features(const Graph& g, const std::string& path);
void load_features(Graph& g, const std::string& path);

void save_labels(const Graph& g, const std::string& path);
void load_labels(Graph& g, const std::string& path);

/// Formats a double with enough digits to round-trip exactly.
std::string format_real(double x);

}  // namespace gnncf
