#include "gnncf/graph.hpp"

#include "gnncf/rng.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace gnncf {

Graph::Graph(NodeId node_count, const std::vector<Edge>& edges) {
  if (node_count < 0) throw InputError("negative node count");
  adj_.resize(node_count);
  std::set<Edge> uniq(edges.begin(), edges.end());
  for (const Edge& e : uniq) {
    if (e.a < 0 || e.b >= node_count)
      throw InputError("edge endpoint out of range: " + std::to_string(e.a) + " " +
                       std::to_string(e.b));
    adj_[e.a].push_back(e.b);
    adj_[e.b].push_back(e.a);
  }
  for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());
  edge_list_.assign(uniq.begin(), uniq.end());
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  check_node(u);
  check_node(v);
  if (u == v) return false;
  const auto& nbrs = adj_[u];
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

int Graph::triangles_at(NodeId v) const {
  check_node(v);
  const auto& nbrs = adj_[v];
  int t = 0;
  for (std::size_t i = 0; i < nbrs.size(); ++i)
    for (std::size_t j = i + 1; j < nbrs.size(); ++j)
      if (has_edge(nbrs[i], nbrs[j])) ++t;
  return t;
}

double Graph::clustering_coefficient(NodeId v) const {
  int d = degree(v);
  if (d < 2) return 0.0;
  return 2.0 * triangles_at(v) / (static_cast<double>(d) * (d - 1));
}

std::pair<std::vector<NodeId>, std::vector<Edge>> Graph::khop_neighborhood(NodeId v,
                                                                           int hops) const {
  check_node(v);
  if (hops < 1) throw InputError("hops must be positive");
  std::vector<int> dist(node_count(), -1);
  std::queue<NodeId> q;
  dist[v] = 0;
  q.push(v);
  std::vector<NodeId> nodes{v};
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop();
    if (dist[u] == hops) continue;
    for (NodeId w : adj_[u]) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        nodes.push_back(w);
        q.push(w);
      }
    }
  }
  std::sort(nodes.begin(), nodes.end());
  std::vector<Edge> induced;
  for (NodeId u : nodes)
    for (NodeId w : adj_[u])
      if (u < w && dist[w] >= 0) induced.emplace_back(u, w);
  std::sort(induced.begin(), induced.end());
  return {nodes, induced};
}

Graph Graph::apply(const Perturbation& p) const {
  std::set<Edge> edges(edge_list_.begin(), edge_list_.end());
  for (const Edge& e : p.deletions) {
    if (edges.erase(e) == 0)
      throw ContractError("deletion of missing edge (" + std::to_string(e.a) + "," +
                          std::to_string(e.b) + ")");
  }
  for (const Edge& e : p.additions) {
    if (has_edge(e.a, e.b))
      throw ContractError("addition of existing edge (" + std::to_string(e.a) + "," +
                          std::to_string(e.b) + ")");
    if (!edges.insert(e).second)
      throw ContractError("duplicate addition (" + std::to_string(e.a) + "," +
                          std::to_string(e.b) + ")");
  }
  Graph out(node_count(), std::vector<Edge>(edges.begin(), edges.end()));
  out.features = features;
  out.labels = labels;
  out.train_mask = train_mask;
  return out;
}

int Graph::class_count() const {
  int c = 0;
  for (int y : labels) c = std::max(c, y + 1);
  return c;
}

void assign_split(Graph& g, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction > 1.0) throw InputError("bad train fraction");
  std::vector<NodeId> ids(g.node_count());
  for (NodeId i = 0; i < g.node_count(); ++i) ids[i] = i;
  // Fisher-Yates with an explicit engine so the split is platform-stable.
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(ids.size()));
  g.train_mask.assign(g.node_count(), false);
  for (std::size_t i = 0; i < n_train; ++i) g.train_mask[ids[i]] = true;
}

}  // namespace gnncf
