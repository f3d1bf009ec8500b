#include "gnncf/metrics.hpp"

#include "gnncf/baselines.hpp"
#include "gnncf/io.hpp"
#include "gnncf/theory.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace gnncf {

double misclassification_rate(const std::vector<TargetRecord>& records) {
  if (records.empty()) return 0.0;
  double n = 0;
  for (const auto& r : records) n += r.success ? 1.0 : 0.0;
  return n / static_cast<double>(records.size());
}

double fidelity(const std::vector<TargetRecord>& records) {
  if (records.empty()) return 0.0;
  double s = 0;
  for (const auto& r : records) s += r.original_prob - r.perturbed_prob;
  return s / static_cast<double>(records.size());
}

EvaluationReport aggregate(const std::vector<TargetRecord>& records) {
  EvaluationReport rep;
  rep.n_targets = static_cast<int>(records.size());
  rep.misclassification_rate = misclassification_rate(records);
  rep.fidelity = fidelity(records);
  double size = 0, adds = 0, dels = 0, plau = 0, time = 0;
  for (const auto& r : records) {
    plau += r.plausibility;
    time += r.time_seconds;
    if (!r.success) continue;
    ++rep.n_successes;
    size += static_cast<double>(r.perturbation.size());
    adds += static_cast<double>(r.perturbation.additions.size());
    dels += static_cast<double>(r.perturbation.deletions.size());
  }
  if (rep.n_successes > 0) {
    rep.mean_size = size / rep.n_successes;
    rep.mean_additions = adds / rep.n_successes;
    rep.mean_deletions = dels / rep.n_successes;
  }
  if (rep.n_targets > 0) {
    rep.mean_plausibility = plau / rep.n_targets;
    rep.mean_time_seconds = time / rep.n_targets;
  }
  return rep;
}

double plausibility_score(double l_plau, double k) {
  return 2.0 * (1.0 - 1.0 / (1.0 + std::exp(-k * l_plau)));
}

namespace {

struct SmallGraph {
  std::vector<NodeId> nodes;                // sorted global ids
  std::vector<std::pair<int, int>> edges;   // local indices
  std::vector<std::vector<bool>> adj;

  explicit SmallGraph(const std::vector<Edge>& es) {
    std::set<NodeId> ns;
    for (const Edge& e : es) {
      ns.insert(e.a);
      ns.insert(e.b);
    }
    nodes.assign(ns.begin(), ns.end());
    auto local = [&](NodeId v) {
      return static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };
    adj.assign(nodes.size(), std::vector<bool>(nodes.size(), false));
    for (const Edge& e : es) {
      int i = local(e.a), j = local(e.b);
      edges.emplace_back(i, j);
      adj[i][j] = adj[j][i] = true;
    }
  }
};

// Maximum common edge count over injective node mappings (small -> large),
// depth-first with an optimistic bound.
int max_common_edges(const SmallGraph& a, const SmallGraph& b) {
  const SmallGraph& s = a.nodes.size() <= b.nodes.size() ? a : b;
  const SmallGraph& t = a.nodes.size() <= b.nodes.size() ? b : a;
  const int ns = static_cast<int>(s.nodes.size());
  const int nt = static_cast<int>(t.nodes.size());
  std::vector<int> map(ns, -1);
  std::vector<bool> used(nt, false);
  int best = 0;
  // For the bound: an edge is decided once its larger endpoint is assigned,
  // so open_from[i] = number of s-edges with max endpoint >= i.
  std::vector<int> open_from(ns + 1, 0);
  for (const auto& [x, y] : s.edges) ++open_from[std::max(x, y)];
  for (int i = ns - 1; i >= 0; --i) open_from[i] += open_from[i + 1];

  auto dfs = [&](auto&& self, int i, int matched) -> void {
    if (i == ns) {
      best = std::max(best, matched);
      return;
    }
    if (matched + open_from[i] <= best) return;
    for (int c = 0; c < nt; ++c) {
      if (used[c]) continue;
      used[c] = true;
      map[i] = c;
      int gained = 0;
      for (const auto& [x, y] : s.edges) {
        int hi = std::max(x, y), lo = std::min(x, y);
        if (hi == i && t.adj[map[lo]][c]) ++gained;
      }
      self(self, i + 1, matched + gained);
      used[c] = false;
      map[i] = -1;
    }
  };
  dfs(dfs, 0, 0);
  return best;
}

Vector subgraph_embedding(const std::vector<Edge>& es, const GcnModel& model, const Graph& g) {
  SmallGraph sg(es);
  const auto n = static_cast<Eigen::Index>(sg.nodes.size());
  Matrix a = Matrix::Zero(n, n);
  for (const auto& [i, j] : sg.edges) a(i, j) = a(j, i) = 1.0;
  Vector degrees;
  Matrix a_hat = normalize_adjacency(a, degrees);
  ForwardTrace t = forward(model, a_hat, feature_matrix(g, sg.nodes), &degrees);
  const Matrix& emb = model.num_layers() >= 2 ? t.act.back() : t.logits;
  return emb.colwise().mean().transpose();
}

}  // namespace

SimilarityTriple graph_similarity(const std::vector<Edge>& a, const std::vector<Edge>& b,
                                  const GcnModel* model, const Graph* g) {
  SimilarityTriple out;
  if (a.empty() || b.empty()) {
    out.ged = 1.0;
    return out;  // mcs = 0, gev = 0 by convention
  }
  SmallGraph ga(a), gb(b);
  int m = max_common_edges(ga, gb);
  double va = static_cast<double>(ga.nodes.size()), vb = static_cast<double>(gb.nodes.size());
  double ea = static_cast<double>(a.size()), eb = static_cast<double>(b.size());
  double raw = std::abs(va - vb) + ea + eb - 2.0 * m;
  out.ged = raw / (va + vb + ea + eb);
  // MCS respects node identity: the shared subgraph of two edit sets over the
  // same node universe is their edge intersection.
  std::set<Edge> sa(a.begin(), a.end());
  int shared = 0;
  for (const Edge& e : b) shared += sa.count(e) ? 1 : 0;
  out.mcs = shared / std::max(ea, eb);
  if (model && g) {
    Vector ua = subgraph_embedding(a, *model, *g);
    Vector ub = subgraph_embedding(b, *model, *g);
    double na = ua.norm(), nb = ub.norm();
    out.gev = (na > 0 && nb > 0) ? ua.dot(ub) / (na * nb) : 0.0;
  }
  return out;
}

std::vector<Hypothesis1Row> hypothesis1_experiment(const GcnModel& model, const Graph& g,
                                                   const std::vector<NodeId>& targets, int budget,
                                                   const CandidateConfig& config) {
  std::vector<Hypothesis1Row> rows;
  for (NodeId v : targets) {
    Hypothesis1Row row;
    row.target = v;
    CandidateSet cands = build_candidates(model, g, v, config);
    Perturbation attack = attack_only_addition(model, g, v, budget, false, config);
    const int original = predict_node(model, g, v).predicted_class;
    row.attack_success =
        !attack.empty() && predict_node(model, g.apply(attack), v).predicted_class != original;

    // Largest enumerable subset size within the oracle's combinatorial guard.
    std::optional<Perturbation> oracle;
    const auto n = static_cast<double>(cands.candidates.size());
    for (int ms = budget; ms >= 1 && !oracle; --ms) {
      double combos = 1.0;
      for (int i = 0; i < ms; ++i) combos = combos * (n - i) / (i + 1);
      if (combos > 1e6) continue;
      oracle = brute_force_counterfactual(model, g, v, cands, ms);
      if (!oracle) break;
    }
    if (oracle) {
      row.oracle_found = true;
      std::vector<Edge> cf = oracle->additions;
      cf.insert(cf.end(), oracle->deletions.begin(), oracle->deletions.end());
      row.sim = graph_similarity(attack.additions, cf, &model, &g);
    } else {
      row.sim.ged = 1.0;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string serialize_record(const TargetRecord& r) {
  std::ostringstream out;
  out << "target-record v1\n";
  out << "target " << r.target << "\n";
  out << "method " << r.method << "\n";
  out << "success " << (r.success ? 1 : 0) << "\n";
  out << "original_class " << r.original_class << "\n";
  out << "new_class " << r.new_class << "\n";
  out << "original_prob " << format_real(r.original_prob) << "\n";
  out << "perturbed_prob " << format_real(r.perturbed_prob) << "\n";
  out << "additions " << r.perturbation.additions.size() << "\n";
  for (const Edge& e : r.perturbation.additions) out << e.a << " " << e.b << "\n";
  out << "deletions " << r.perturbation.deletions.size() << "\n";
  for (const Edge& e : r.perturbation.deletions) out << e.a << " " << e.b << "\n";
  out << "plau_loss " << format_real(r.plau_loss) << "\n";
  out << "plausibility " << format_real(r.plausibility) << "\n";
  out << "epochs_used " << r.epochs_used << "\n";
  out << "pruned " << (r.pruned ? 1 : 0) << "\n";
  out << "prune_removed " << r.prune_removed << "\n";
  out << "prune_edges_tested " << r.prune_edges_tested << "\n";
  out << "prune_forward_passes " << r.prune_forward_passes << "\n";
  // Wall-clock time is deliberately excluded: records must be byte-identical
  // across reruns of the same configuration.
  out << "history " << r.history.size() << "\n";
  for (const auto& h : r.history)
    out << h.epoch << " " << format_real(h.total) << " " << format_real(h.pred) << " "
        << format_real(h.dist) << " " << format_real(h.plau) << " " << format_real(h.deg_anom)
        << " " << format_real(h.motif_viol) << " " << (h.flipped ? 1 : 0) << "\n";
  out << "end\n";
  return out.str();
}

TargetRecord parse_record(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next = [&]() {
    if (!std::getline(in, line)) throw ParseError("target record: unexpected end of input");
    return line;
  };
  if (next() != "target-record v1") throw ParseError("target record: bad header");
  TargetRecord r;
  auto field = [&](const std::string& key) {
    std::istringstream ss(next());
    std::string k;
    ss >> k;
    if (k != key) throw ParseError("target record: expected '" + key + "', got '" + k + "'");
    std::string rest;
    std::getline(ss, rest);
    return rest.empty() ? rest : rest.substr(1);
  };
  r.target = std::stoi(field("target"));
  r.method = field("method");
  r.success = std::stoi(field("success")) != 0;
  r.original_class = std::stoi(field("original_class"));
  r.new_class = std::stoi(field("new_class"));
  r.original_prob = std::stod(field("original_prob"));
  r.perturbed_prob = std::stod(field("perturbed_prob"));
  int n_add = std::stoi(field("additions"));
  for (int i = 0; i < n_add; ++i) {
    std::istringstream ss(next());
    int a, b;
    ss >> a >> b;
    r.perturbation.additions.emplace_back(a, b);
  }
  int n_del = std::stoi(field("deletions"));
  for (int i = 0; i < n_del; ++i) {
    std::istringstream ss(next());
    int a, b;
    ss >> a >> b;
    r.perturbation.deletions.emplace_back(a, b);
  }
  r.plau_loss = std::stod(field("plau_loss"));
  r.plausibility = std::stod(field("plausibility"));
  r.epochs_used = std::stoi(field("epochs_used"));
  r.pruned = std::stoi(field("pruned")) != 0;
  r.prune_removed = std::stoi(field("prune_removed"));
  r.prune_edges_tested = std::stoi(field("prune_edges_tested"));
  r.prune_forward_passes = std::stoi(field("prune_forward_passes"));
  int n_hist = std::stoi(field("history"));
  for (int i = 0; i < n_hist; ++i) {
    std::istringstream ss(next());
    LossBreakdown h;
    int flipped;
    ss >> h.epoch >> h.total >> h.pred >> h.dist >> h.plau >> h.deg_anom >> h.motif_viol >>
        flipped;
    h.flipped = flipped != 0;
    r.history.push_back(h);
  }
  if (next() != "end") throw ParseError("target record: missing end marker");
  return r;
}

std::string summary_csv(const std::vector<std::pair<std::string, EvaluationReport>>& rows) {
  std::ostringstream out;
  out << "method,misclass,fidelity,de_total,de_add,de_del,plausibility,time_sec\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("--"); };
  for (const auto& [method, r] : rows) {
    out << method << "," << format_real(r.misclassification_rate) << "," << format_real(r.fidelity)
        << "," << opt(r.mean_size) << "," << opt(r.mean_additions) << ","
        << opt(r.mean_deletions) << "," << format_real(r.mean_plausibility) << ","
        << format_real(r.mean_time_seconds) << "\n";
  }
  return out.str();
}

}  // namespace gnncf
