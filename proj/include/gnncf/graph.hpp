#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gnncf {

using NodeId = std::int32_t;

/// Unordered node pair with canonical ordering (first < second).
struct Edge {
  NodeId a;
  NodeId b;

  Edge() : a(0), b(0) {}
  Edge(NodeId u, NodeId v) : a(u < v ? u : v), b(u < v ? v : u) {
    if (u == v) throw std::invalid_argument("self-loop edge");
  }

  bool operator==(const Edge& o) const { return a == o.a && b == o.b; }
  bool operator<(const Edge& o) const { return a < o.a || (a == o.a && b < o.b); }
};

struct InputError : std::runtime_error {
  explicit InputError(const std::string& m) : std::runtime_error(m) {}
};
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& m) : std::logic_error(m) {}
};
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& m) : std::runtime_error(m) {}
};
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& m) : std::runtime_error(m) {}
};

/// Signed edge edit set: additions must be absent from the base graph,
/// deletions must be present. Disjoint by construction of the checks in
/// Graph::apply.
struct Perturbation {
  std::vector<Edge> additions;
  std::vector<Edge> deletions;

  std::size_t size() const { return additions.size() + deletions.size(); }
  bool empty() const { return additions.empty() && deletions.empty(); }

  Perturbation inverse() const { return Perturbation{deletions, additions}; }
};

/// Immutable undirected graph with optional per-node features and labels.
/// Neighbor lists are kept sorted; no self-loops are stored.
class Graph {
 public:
  Graph() = default;
  Graph(NodeId node_count, const std::vector<Edge>& edges);

  NodeId node_count() const { return static_cast<NodeId>(adj_.size()); }
  std::size_t edge_count() const { return edge_list_.size(); }

  const std::vector<NodeId>& neighbors(NodeId v) const {
    check_node(v);
    return adj_[v];
  }
  /// Canonical edge list, sorted (a < b, lexicographic).
  const std::vector<Edge>& edges() const { return edge_list_; }

  bool has_edge(NodeId u, NodeId v) const;

  int degree(NodeId v) const {
    check_node(v);
    return static_cast<int>(adj_[v].size());
  }

  /// Number of edges among the neighbors of v.
  int triangles_at(NodeId v) const;

  /// 2*t / (d*(d-1)); 0 when degree < 2.
  double clustering_coefficient(NodeId v) const;

  /// Nodes at distance <= hops from v (including v) and the induced edges.
  /// Node list is sorted ascending; edge list canonical.
  std::pair<std::vector<NodeId>, std::vector<Edge>> khop_neighborhood(NodeId v, int hops) const;

  /// Base edges minus deletions plus additions; features/labels carried over.
  Graph apply(const Perturbation& p) const;

  // Per-node data. Features may be empty (featureless synthetic graphs).
  std::vector<std::vector<double>> features;  // node -> feature vector
  std::vector<int> labels;                    // node -> class id
  std::vector<bool> train_mask;               // node -> train membership

  int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
  int class_count() const;

  void check_node(NodeId v) const {
    if (v < 0 || v >= node_count()) throw InputError("node id out of range: " + std::to_string(v));
  }

 private:
  std::vector<std::vector<NodeId>> adj_;
  std::vector<Edge> edge_list_;
};

// Synthetic dataset generators. Deterministic for a fixed seed.

/// Barabasi-Albert base graph with five-node house motifs attached by one
/// random edge each. Labels: 0 base, 1 house top, 2 middle, 3 bottom.
Graph gen_ba_shapes(int base_nodes, int attach, int num_motifs, std::uint64_t seed);

/// Balanced binary tree with fixed-length cycles attached by single edges.
/// Labels: 0 tree, 1 cycle.
Graph gen_tree_cycles(int tree_depth, int num_cycles, int cycle_len, std::uint64_t seed);

/// Two-feature (income, education) peer graph. Label 1 iff income > 5 and
/// degree > 3.
Graph gen_loan_decision(int applicants, std::uint64_t seed);

/// Assigns a seeded random train/test split in-place.
void assign_split(Graph& g, double train_fraction, std::uint64_t seed);

}  // namespace gnncf
