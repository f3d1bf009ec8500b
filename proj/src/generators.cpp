#include "gnncf/graph.hpp"
#include "gnncf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace gnncf {

namespace {

// Preferential attachment: each new node attaches `attach` edges to distinct
// existing nodes sampled proportionally to degree (via the repeated-endpoint
// trick).
std::vector<Edge> barabasi_albert(int n, int attach, Rng& rng) {
  std::vector<Edge> edges;
  std::vector<NodeId> endpoint_pool;  // each edge endpoint appears once
  // Seed clique on the first attach+1 nodes.
  int seed_n = attach + 1;
  for (int i = 0; i < seed_n; ++i)
    for (int j = i + 1; j < seed_n; ++j) {
      edges.emplace_back(i, j);
      endpoint_pool.push_back(i);
      endpoint_pool.push_back(j);
    }
  for (int v = seed_n; v < n; ++v) {
    std::set<NodeId> chosen;
    while (static_cast<int>(chosen.size()) < attach)
      chosen.insert(endpoint_pool[rng.below(endpoint_pool.size())]);
    for (NodeId u : chosen) {
      edges.emplace_back(v, u);
      endpoint_pool.push_back(v);
      endpoint_pool.push_back(u);
    }
  }
  return edges;
}

}  // namespace

Graph gen_ba_shapes(int base_nodes, int attach, int num_motifs, std::uint64_t seed) {
  if (attach < 1 || base_nodes < attach || num_motifs < 0)
    throw InputError("gen_ba_shapes: need base_nodes >= attach >= 1, num_motifs >= 0");
  Rng rng(seed);
  std::vector<Edge> edges = barabasi_albert(base_nodes, attach, rng);
  int n = base_nodes;
  std::vector<int> labels(base_nodes, 0);
  for (int m = 0; m < num_motifs; ++m) {
    // House motif: top t, middles m1,m2, bottoms b1,b2.
    NodeId t = n, m1 = n + 1, m2 = n + 2, b1 = n + 3, b2 = n + 4;
    n += 5;
    edges.emplace_back(t, m1);
    edges.emplace_back(t, m2);
    edges.emplace_back(m1, m2);
    edges.emplace_back(m1, b1);
    edges.emplace_back(m2, b2);
    edges.emplace_back(b1, b2);
    edges.emplace_back(b1, static_cast<NodeId>(rng.below(base_nodes)));
    labels.push_back(1);
    labels.push_back(2);
    labels.push_back(2);
    labels.push_back(3);
    labels.push_back(3);
  }
  Graph g(n, edges);
  g.labels = labels;
  g.train_mask.assign(n, true);
  return g;
}

Graph gen_tree_cycles(int tree_depth, int num_cycles, int cycle_len, std::uint64_t seed) {
  if (tree_depth < 1 || cycle_len < 3 || num_cycles < 0)
    throw InputError("gen_tree_cycles: need tree_depth >= 1, cycle_len >= 3, num_cycles >= 0");
  Rng rng(seed);
  int tree_n = (1 << (tree_depth + 1)) - 1;  // balanced binary tree, root at 0
  std::vector<Edge> edges;
  for (int v = 1; v < tree_n; ++v) edges.emplace_back(v, (v - 1) / 2);
  int n = tree_n;
  std::vector<int> labels(tree_n, 0);
  for (int c = 0; c < num_cycles; ++c) {
    NodeId first = n;
    for (int i = 0; i < cycle_len; ++i) {
      NodeId u = n + i;
      NodeId w = n + (i + 1) % cycle_len;
      if (u < w) edges.emplace_back(u, w);
      labels.push_back(1);
    }
    edges.emplace_back(n + cycle_len - 1, first);
    edges.emplace_back(first, static_cast<NodeId>(rng.below(tree_n)));
    n += cycle_len;
  }
  Graph g(n, edges);
  g.labels = labels;
  g.train_mask.assign(n, true);
  return g;
}

Graph gen_loan_decision(int applicants, std::uint64_t seed) {
  if (applicants < 2) throw InputError("gen_loan_decision: need applicants >= 2");
  Rng rng(seed);
  std::vector<std::vector<double>> features(applicants);
  for (int i = 0; i < applicants; ++i) {
    double income = rng.real(0.0, 10.0);
    double education = rng.real(0.0, 5.0);
    features[i] = {income, education};
  }
  // Peer edges: mean degree ~4 so that roughly half of high-income nodes
  // miss the degree > 3 condition.
  std::set<Edge> edge_set;
  auto target_edges = static_cast<std::size_t>(applicants * 2);
  while (edge_set.size() < target_edges) {
    auto u = static_cast<NodeId>(rng.below(applicants));
    auto v = static_cast<NodeId>(rng.below(applicants));
    if (u == v) continue;
    edge_set.insert(Edge(u, v));
  }
  Graph g(applicants, std::vector<Edge>(edge_set.begin(), edge_set.end()));
  g.features = std::move(features);
  g.labels.resize(applicants);
  for (int i = 0; i < applicants; ++i)
    g.labels[i] = (g.features[i][0] > 5.0 && g.degree(i) > 3) ? 1 : 0;
  g.train_mask.assign(applicants, true);
  return g;
}

}  // namespace gnncf
