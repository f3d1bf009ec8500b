#include "gnncf/candidates.hpp"

#include "gnncf/io.hpp"
#include "gnncf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace gnncf {

std::size_t CandidateSet::deletion_count() const {
  std::size_t n = 0;
  for (const auto& c : candidates) n += c.is_addition ? 0 : 1;
  return n;
}

std::size_t CandidateSet::addition_count() const { return candidates.size() - deletion_count(); }

namespace {

// Per-node orbit tally for one connected 3- or 4-node induced subgraph.
void tally_subgraph(const Graph& g, const std::vector<NodeId>& sub,
                    std::vector<std::array<std::int64_t, 15>>& counts) {
  const auto k = sub.size();
  int deg[4] = {0, 0, 0, 0};
  int m = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (g.has_edge(sub[i], sub[j])) {
        ++deg[i];
        ++deg[j];
        ++m;
      }
  if (k == 3) {
    for (std::size_t i = 0; i < k; ++i) {
      int orbit = m == 3 ? 3 : (deg[i] == 2 ? 2 : 1);
      ++counts[sub[i]][orbit];
    }
    return;
  }
  // 4-node graphlets, identified by edge count + internal degree.
  for (std::size_t i = 0; i < k; ++i) {
    int orbit;
    switch (m) {
      case 3: {
        bool star = deg[0] == 3 || deg[1] == 3 || deg[2] == 3 || deg[3] == 3;
        if (star)
          orbit = deg[i] == 3 ? 7 : 6;
        else
          orbit = deg[i] == 2 ? 5 : 4;
        break;
      }
      case 4:
        if (deg[0] == 2 && deg[1] == 2 && deg[2] == 2 && deg[3] == 2)
          orbit = 8;  // 4-cycle
        else
          orbit = deg[i] == 1 ? 9 : (deg[i] == 2 ? 10 : 11);  // tailed triangle
        break;
      case 5:
        orbit = deg[i] == 2 ? 12 : 13;  // diamond
        break;
      default:
        orbit = 14;  // K4
        break;
    }
    ++counts[sub[i]][orbit];
  }
}

// ESU (Wernicke): enumerate every connected k-node induced subgraph once.
void esu_extend(const Graph& g, std::vector<NodeId>& sub, std::vector<NodeId> ext, NodeId root,
                std::size_t k, std::vector<char>& in_sub_or_nbr,
                std::vector<std::array<std::int64_t, 15>>& counts) {
  if (sub.size() == k) {
    tally_subgraph(g, sub, counts);
    return;
  }
  while (!ext.empty()) {
    NodeId w = ext.back();
    ext.pop_back();
    std::vector<NodeId> ext2 = ext;
    std::vector<NodeId> marked;
    for (NodeId u : g.neighbors(w))
      if (u > root && !in_sub_or_nbr[u]) {
        ext2.push_back(u);
        in_sub_or_nbr[u] = 1;
        marked.push_back(u);
      }
    sub.push_back(w);
    esu_extend(g, sub, std::move(ext2), root, k, in_sub_or_nbr, counts);
    sub.pop_back();
    for (NodeId u : marked) in_sub_or_nbr[u] = 0;
  }
}

void esu_count(const Graph& g, std::size_t k, std::vector<std::array<std::int64_t, 15>>& counts) {
  std::vector<char> in_sub_or_nbr(g.node_count(), 0);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    std::vector<NodeId> ext;
    for (NodeId u : g.neighbors(v))
      if (u > v) {
        ext.push_back(u);
        in_sub_or_nbr[u] = 1;
      }
    in_sub_or_nbr[v] = 1;
    std::vector<NodeId> sub{v};
    esu_extend(g, sub, std::move(ext), v, k, in_sub_or_nbr, counts);
    in_sub_or_nbr[v] = 0;
    for (NodeId u : g.neighbors(v))
      if (u > v) in_sub_or_nbr[u] = 0;
  }
}

}  // namespace

std::vector<OrbitProfile> count_orbits(const Graph& g, const std::vector<NodeId>& nodes) {
  std::vector<std::array<std::int64_t, 15>> counts(g.node_count());
  for (auto& a : counts) a.fill(0);
  esu_count(g, 3, counts);
  esu_count(g, 4, counts);
  std::vector<OrbitProfile> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) {
    g.check_node(v);
    OrbitProfile p;
    p.node = v;
    p.orbit_counts = counts[v];
    p.orbit_counts[0] = g.degree(v);
    out.push_back(p);
  }
  return out;
}

std::vector<Edge> deletion_candidates(const Graph& g, int model_depth, NodeId v) {
  return g.khop_neighborhood(v, model_depth + 1).second;
}

std::vector<Candidate> addition_candidates_gradient(const GcnModel& model, const Graph& g,
                                                    NodeId v, int k,
                                                    const CandidateConfig& config,
                                                    bool* truncated) {
  g.check_node(v);
  if (truncated) *truncated = false;
  if (k <= 0) return {};
  const int depth = model.num_layers();

  // Candidate endpoint pool: (l+2)-hop ball plus a seeded far sample.
  auto [ball, ball_edges] = g.khop_neighborhood(v, depth + 2);
  std::set<NodeId> pool(ball.begin(), ball.end());
  std::vector<NodeId> far;
  for (NodeId u = 0; u < g.node_count(); ++u)
    if (!pool.count(u)) far.push_back(u);
  Rng rng(config.seed + static_cast<std::uint64_t>(v));
  for (std::size_t i = far.size(); i > 1; --i) std::swap(far[i - 1], far[rng.below(i)]);
  for (std::size_t i = 0; i < far.size() && i < static_cast<std::size_t>(config.far_sample); ++i)
    pool.insert(far[i]);

  Vector degrees;
  Matrix a_hat = normalize_adjacency(dense_adjacency(g), degrees);
  ForwardTrace trace = forward(model, a_hat, feature_matrix(g), &degrees);
  Matrix grad = grad_margin_wrt_adjacency(model, trace, v);

  std::vector<Candidate> out;
  for (NodeId u : pool) {
    if (u == v || g.has_edge(u, v)) continue;
    double ge = grad(v, u);
    if (ge >= 0.0) continue;  // only additions predicted to reduce the margin
    Candidate c;
    c.edge = Edge(v, u);
    c.is_addition = true;
    c.provenance = Provenance::GradientAddition;
    c.score = std::abs(ge);
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.edge < b.edge;
  });
  if (out.size() > static_cast<std::size_t>(k))
    out.resize(k);
  else if (truncated && out.size() < static_cast<std::size_t>(k))
    *truncated = true;
  return out;
}

std::vector<Candidate> addition_candidates_orbit(
    const GcnModel& model, const Graph& g, NodeId v, int k,
    const std::optional<std::array<double, 15>>& calibration_centroid, std::string* diagnostic) {
  g.check_node(v);
  if (k <= 0) return {};
  ForwardTrace trace = forward(model, normalize_adjacency(dense_adjacency(g)), feature_matrix(g));
  int v_class = prediction_from_trace(trace, v, v).predicted_class;

  std::vector<NodeId> opposite;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (u == v || g.has_edge(u, v)) continue;
    if (prediction_from_trace(trace, u, u).predicted_class != v_class) opposite.push_back(u);
  }
  if (opposite.empty()) {
    if (diagnostic) *diagnostic = "no opposite-class addition endpoint available";
    return {};
  }
  std::vector<OrbitProfile> profiles = count_orbits(g, opposite);

  std::vector<Candidate> out;
  for (std::size_t i = 0; i < opposite.size(); ++i) {
    double score;
    if (calibration_centroid) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (int o = 0; o < 15; ++o) {
        double a = static_cast<double>(profiles[i].orbit_counts[o]);
        double b = (*calibration_centroid)[o];
        dot += a * b;
        na += a * a;
        nb += b * b;
      }
      score = (na > 0.0 && nb > 0.0) ? dot / std::sqrt(na * nb) : 0.0;
    } else {
      // Fallback role score: structurally embedded nodes (path-end and
      // triangle participation) make influential endpoints.
      score = static_cast<double>(profiles[i].orbit_counts[1] + profiles[i].orbit_counts[3]);
    }
    Candidate c;
    c.edge = Edge(v, opposite[i]);
    c.is_addition = true;
    c.provenance = Provenance::OrbitAddition;
    c.score = score;
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.edge < b.edge;
  });
  if (out.size() > static_cast<std::size_t>(k)) out.resize(k);
  return out;
}

CandidateSet build_candidates(const GcnModel& model, const Graph& g, NodeId v,
                              const CandidateConfig& config) {
  CandidateSet s;
  s.target = v;
  const int depth = model.num_layers();
  for (const Edge& e : deletion_candidates(g, depth, v)) {
    Candidate c;
    c.edge = e;
    c.is_addition = false;
    c.provenance = Provenance::LocalDeletion;
    s.candidates.push_back(c);
  }
  std::set<Edge> seen;
  for (const auto& c : s.candidates) seen.insert(c.edge);
  bool truncated = false;
  for (auto& c :
       addition_candidates_gradient(model, g, v, config.gradient_additions, config, &truncated))
    if (seen.insert(c.edge).second) s.candidates.push_back(c);
  s.truncated = truncated;
  std::string diag;
  for (auto& c : addition_candidates_orbit(model, g, v, config.orbit_additions, std::nullopt, &diag))
    if (seen.insert(c.edge).second) s.candidates.push_back(c);
  s.diagnostic = diag;

  std::set<NodeId> locals;
  auto ball = g.khop_neighborhood(v, depth + 1).first;
  locals.insert(ball.begin(), ball.end());
  for (const auto& c : s.candidates)
    if (c.is_addition) {
      locals.insert(c.edge.a);
      locals.insert(c.edge.b);
    }
  s.local_nodes.assign(locals.begin(), locals.end());
  return s;
}

int LocalProblem::local_of(NodeId global) const {
  if (global < 0 || global >= static_cast<NodeId>(local_index.size()) || local_index[global] < 0)
    throw ContractError("node not in local problem: " + std::to_string(global));
  return local_index[global];
}

LocalProblem build_local_adjacency(const Graph& g, NodeId v, int model_depth,
                                   const CandidateSet& candidates) {
  if (candidates.target != v) throw ContractError("candidate set built for a different target");
  std::set<NodeId> node_set(candidates.local_nodes.begin(), candidates.local_nodes.end());
  auto ball = g.khop_neighborhood(v, model_depth + 1).first;
  node_set.insert(ball.begin(), ball.end());
  // Support closure: feature propagation from an added endpoint needs its
  // own (depth-1)-hop surroundings for the local forward to stay exact.
  for (const auto& c : candidates.candidates) {
    if (!c.is_addition) continue;
    NodeId u = c.edge.a == v ? c.edge.b : c.edge.a;
    node_set.insert(u);
    if (model_depth >= 2) {
      auto sup = g.khop_neighborhood(u, model_depth - 1).first;
      node_set.insert(sup.begin(), sup.end());
    }
  }

  LocalProblem lp;
  lp.nodes.assign(node_set.begin(), node_set.end());
  lp.local_index.assign(g.node_count(), -1);
  for (std::size_t i = 0; i < lp.nodes.size(); ++i) lp.local_index[lp.nodes[i]] = static_cast<int>(i);

  const auto n = static_cast<Eigen::Index>(lp.nodes.size());
  lp.base_adjacency = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (NodeId w : g.neighbors(lp.nodes[i])) {
      int j = lp.local_index[w];
      if (j >= 0) lp.base_adjacency(i, j) = 1.0;
    }
  lp.exterior_degree = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    lp.exterior_degree(i) = g.degree(lp.nodes[i]) - lp.base_adjacency.row(i).sum();
  lp.target = lp.local_of(v);
  for (const auto& c : candidates.candidates)
    lp.slots.emplace_back(lp.local_of(c.edge.a), lp.local_of(c.edge.b));
  return lp;
}

std::string serialize_candidates(const CandidateSet& s) {
  std::ostringstream out;
  out << "candidate-set v1\n";
  out << "target " << s.target << "\n";
  out << "truncated " << (s.truncated ? 1 : 0) << "\n";
  if (!s.diagnostic.empty()) out << "diagnostic " << s.diagnostic << "\n";
  out << "candidates " << s.candidates.size() << "\n";
  for (const auto& c : s.candidates) {
    const char* prov = c.provenance == Provenance::LocalDeletion      ? "local-deletion"
                       : c.provenance == Provenance::GradientAddition ? "gradient-addition"
                                                                      : "orbit-addition";
    out << (c.is_addition ? "add" : "del") << " " << c.edge.a << " " << c.edge.b << " " << prov
        << " " << format_real(c.score) << "\n";
  }
  out << "local_nodes";
  for (NodeId u : s.local_nodes) out << " " << u;
  out << "\n";
  return out.str();
}

}  // namespace gnncf
