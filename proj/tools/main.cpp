#include <CLI11.hpp>

#include "gnncf/baselines.hpp"
#include "gnncf/candidates.hpp"
#include "gnncf/gcn.hpp"
#include "gnncf/graph.hpp"
#include "gnncf/io.hpp"
#include "gnncf/metrics.hpp"
#include "gnncf/optimizer.hpp"
#include "gnncf/pruner.hpp"
#include "gnncf/rng.hpp"
#include "gnncf/theory.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace gnncf;

namespace {

// ---------------------------------------------------------------------------
// Dataset plumbing

struct DatasetOptions {
  std::string generator = "ba-shapes";
  int base_nodes = 300;
  int attach = 5;
  int motifs = 80;
  int tree_depth = 8;
  int cycles = 80;
  int cycle_len = 6;
  int applicants = 300;
  double train_fraction = 0.8;
  std::uint64_t seed = 102;
};

Graph make_dataset(const DatasetOptions& d) {
  Graph g;
  if (d.generator == "ba-shapes") {
    g = gen_ba_shapes(d.base_nodes, d.attach, d.motifs, d.seed);
  } else if (d.generator == "tree-cycles") {
    g = gen_tree_cycles(d.tree_depth, d.cycles, d.cycle_len, d.seed);
  } else if (d.generator == "loan") {
    g = gen_loan_decision(d.applicants, d.seed);
  } else {
    throw InputError("unknown generator: " + d.generator);
  }
  assign_split(g, d.train_fraction, d.seed);
  return g;
}

void write_kv_file(const fs::path& path, const std::string& header,
                   const std::vector<std::pair<std::string, std::string>>& kvs) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for writing: " + path.string());
  out << header << "\n";
  for (const auto& [k, v] : kvs) out << k << " = " << v << "\n";
}

std::map<std::string, std::string> read_kv_file(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw ParseError(path.string() + ": expected header '" + header + "'");
  std::map<std::string, std::string> kvs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ParseError(path.string() + ": bad line: " + line);
    kvs[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kvs;
}

void write_dataset(const Graph& g, const DatasetOptions& d, const fs::path& dir) {
  fs::create_directories(dir);
  save_edge_list(g, (dir / "edges.txt").string());
  if (!g.features.empty()) save_features(g, (dir / "features.txt").string());
  save_labels(g, (dir / "labels.txt").string());
  write_kv_file(dir / "manifest.txt", "gnncf-dataset v1",
                {{"generator", d.generator},
                 {"base_nodes", std::to_string(d.base_nodes)},
                 {"attach", std::to_string(d.attach)},
                 {"motifs", std::to_string(d.motifs)},
                 {"tree_depth", std::to_string(d.tree_depth)},
                 {"cycles", std::to_string(d.cycles)},
                 {"cycle_len", std::to_string(d.cycle_len)},
                 {"applicants", std::to_string(d.applicants)},
                 {"train_fraction", format_real(d.train_fraction)},
                 {"seed", std::to_string(d.seed)},
                 {"nodes", std::to_string(g.node_count())},
                 {"edges", std::to_string(g.edge_count())},
                 {"has_features", g.features.empty() ? "0" : "1"}});
}

Graph load_dataset(const fs::path& dir) {
  auto kvs = read_kv_file(dir / "manifest.txt", "gnncf-dataset v1");
  NodeId nodes = static_cast<NodeId>(std::stol(kvs.at("nodes")));
  Graph g = load_edge_list((dir / "edges.txt").string(), nodes);
  if (kvs.at("has_features") == "1") load_features(g, (dir / "features.txt").string());
  load_labels(g, (dir / "labels.txt").string());
  return g;
}

/// Resolves the graph for a command: an on-disk dataset when --data was
/// given, otherwise an in-process generator run.
Graph resolve_graph(const std::string& data_dir, const DatasetOptions& d) {
  if (!data_dir.empty()) return load_dataset(data_dir);
  return make_dataset(d);
}

// ---------------------------------------------------------------------------
// Model plumbing

struct ModelOptions {
  std::string model_path;  // load instead of training when non-empty
  std::vector<int> hidden = {16};
  double lr = 0.05;
  int epochs = 300;
};

std::pair<double, double> accuracy(const GcnModel& model, const Graph& g) {
  Matrix a_hat = normalize_adjacency(dense_adjacency(g));
  ForwardTrace t = forward(model, a_hat, feature_matrix(g));
  int train_n = 0, train_ok = 0, test_n = 0, test_ok = 0;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    int pred = prediction_from_trace(t, v, v).predicted_class;
    bool ok = pred == g.labels[v];
    if (g.train_mask[v]) {
      ++train_n;
      train_ok += ok;
    } else {
      ++test_n;
      test_ok += ok;
    }
  }
  return {train_n ? double(train_ok) / train_n : 0.0, test_n ? double(test_ok) / test_n : 0.0};
}

GcnModel resolve_model(const Graph& g, const ModelOptions& m, std::uint64_t seed) {
  if (!m.model_path.empty()) return load_model(m.model_path);
  int input_dim = g.features.empty() ? g.node_count() : g.feature_dim();
  GcnModel model = GcnModel::init(input_dim, m.hidden, g.class_count(), seed);
  TrainConfig tc;
  tc.learning_rate = m.lr;
  tc.epochs = m.epochs;
  tc.seed = seed;
  train(model, g, tc);
  return model;
}

// ---------------------------------------------------------------------------
// Target selection

struct TargetOptions {
  std::vector<NodeId> ids;
  int sample_n = 0;
  std::uint64_t sample_seed = 102;
  bool misclassified = false;
};

std::vector<NodeId> select_targets(const GcnModel& model, const Graph& g,
                                   const TargetOptions& to) {
  if (!to.ids.empty()) {
    std::vector<NodeId> ids = to.ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (NodeId v : ids) g.check_node(v);
    return ids;
  }
  Matrix a_hat = normalize_adjacency(dense_adjacency(g));
  ForwardTrace t = forward(model, a_hat, feature_matrix(g));
  std::vector<NodeId> cohort;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    bool correct = prediction_from_trace(t, v, v).predicted_class == g.labels[v];
    if (correct != to.misclassified) cohort.push_back(v);
  }
  if (to.sample_n > 0 && to.sample_n < static_cast<int>(cohort.size())) {
    Rng rng(to.sample_seed);
    std::vector<NodeId> pool = cohort;
    std::vector<NodeId> picked;
    for (int i = 0; i < to.sample_n; ++i) {
      std::size_t j = rng.below(pool.size());
      picked.push_back(pool[j]);
      pool[j] = pool.back();
      pool.pop_back();
    }
    std::sort(picked.begin(), picked.end());
    return picked;
  }
  return cohort;
}

// ---------------------------------------------------------------------------
// Explainer runs

struct ExplainOptions {
  std::string method = "optimizer";
  OptimizerConfig opt;
  CandidateConfig cand;
  bool prune = true;
  bool exhaust = true;  // attack-addition keeps editing to the budget
  int jobs = 1;
  std::vector<std::uint64_t> seeds = {102};
};

std::vector<NodeId> plausibility_scope(const Graph& g, NodeId v, int depth,
                                       const Perturbation& delta) {
  std::vector<NodeId> scope = g.khop_neighborhood(v, depth + 1).first;
  for (const Edge& e : delta.additions) {
    scope.push_back(e.a);
    scope.push_back(e.b);
  }
  std::sort(scope.begin(), scope.end());
  scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
  return scope;
}

TargetRecord explain_one(const GcnModel& model, const Graph& g, NodeId v,
                         const ExplainOptions& eo, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  TargetRecord r;
  r.target = v;
  r.method = eo.method;
  Prediction base = predict_node(model, g, v);
  r.original_class = base.predicted_class;
  r.original_prob = base.class_probs[base.predicted_class];

  Perturbation delta;
  std::vector<NodeId> scope;
  if (eo.method == "optimizer") {
    CandidateConfig cc = eo.cand;
    cc.seed = seed;
    CandidateSet cands = build_candidates(model, g, v, cc);
    OptimizerConfig oc = eo.opt;
    oc.seed = seed;
    OptimizeResult opt = optimize(model, g, v, cands, oc);
    delta = opt.perturbation;
    r.epochs_used = opt.epochs_used;
    r.history = opt.history;
    if (eo.prune && opt.success && !delta.empty()) {
      std::vector<double> psi = importance_scores(opt, cands, delta);
      PrunedResult pr = prune_minimal(model, g, v, cands, delta, psi, &opt);
      delta = pr.perturbation;
      r.pruned = true;
      r.prune_removed = pr.removed_count;
      r.prune_edges_tested = pr.edges_tested;
      r.prune_forward_passes = pr.forward_passes;
    }
    scope = cands.local_nodes;
    for (const Edge& e : delta.additions) {
      scope.push_back(e.a);
      scope.push_back(e.b);
    }
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
  } else if (eo.method == "random-deletion") {
    delta = random_deletion(g, v, model.num_layers(), eo.opt.kappa,
                            seed + static_cast<std::uint64_t>(v));
    scope = plausibility_scope(g, v, model.num_layers(), delta);
  } else if (eo.method == "greedy-deletion") {
    delta = greedy_gradient_deletion(model, g, v, eo.opt.kappa);
    scope = plausibility_scope(g, v, model.num_layers(), delta);
  } else if (eo.method == "attack-addition") {
    CandidateConfig cc = eo.cand;
    cc.seed = seed;
    delta = attack_only_addition(model, g, v, eo.opt.kappa, eo.exhaust, cc);
    scope = plausibility_scope(g, v, model.num_layers(), delta);
  } else {
    throw InputError("unknown method: " + eo.method);
  }

  Prediction after = predict_node(model, g.apply(delta), v);
  r.new_class = after.predicted_class;
  r.perturbed_prob = after.class_probs[r.original_class];
  r.success = after.predicted_class != r.original_class;
  r.perturbation = delta;
  PlauParts pp = loss_plau(g, scope, delta, eo.opt.alpha_deg, eo.opt.alpha_motif);
  r.plau_loss = pp.plau;
  r.plausibility = plausibility_score(pp.plau, eo.opt.k_plau);
  r.time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Explains every target, in parallel up to `jobs` workers; the result vector
/// follows the (sorted) target order, so output never depends on scheduling.
std::vector<TargetRecord> explain_all(const GcnModel& model, const Graph& g,
                                      const std::vector<NodeId>& targets,
                                      const ExplainOptions& eo, std::uint64_t seed) {
  std::vector<TargetRecord> records(targets.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= targets.size()) break;
      records[i] = explain_one(model, g, targets[i], eo, seed);
    }
  };
  int jobs = std::max(1, std::min<int>(eo.jobs, static_cast<int>(targets.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

void write_records(const std::vector<TargetRecord>& records, const fs::path& dir) {
  fs::create_directories(dir);
  for (const TargetRecord& r : records) {
    std::ofstream out(dir / ("target_" + std::to_string(r.target) + ".txt"));
    if (!out) throw ParseError("cannot open record file in " + dir.string());
    out << serialize_record(r);
  }
}

std::string join_u64(const std::vector<std::uint64_t>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

std::string join_ids(const std::vector<NodeId>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

std::vector<std::pair<std::string, std::string>> run_manifest_kvs(
    const std::string& command, const std::string& data_dir, const DatasetOptions& d,
    const ModelOptions& m, const TargetOptions& to, const ExplainOptions& eo) {
  std::ostringstream hidden;
  for (std::size_t i = 0; i < m.hidden.size(); ++i) hidden << (i ? "," : "") << m.hidden[i];
  return {{"command", command},
          {"data_dir", data_dir},
          {"generator", d.generator},
          {"base_nodes", std::to_string(d.base_nodes)},
          {"attach", std::to_string(d.attach)},
          {"motifs", std::to_string(d.motifs)},
          {"tree_depth", std::to_string(d.tree_depth)},
          {"cycles", std::to_string(d.cycles)},
          {"cycle_len", std::to_string(d.cycle_len)},
          {"applicants", std::to_string(d.applicants)},
          {"train_fraction", format_real(d.train_fraction)},
          {"dataset_seed", std::to_string(d.seed)},
          {"model_path", m.model_path},
          {"hidden", hidden.str()},
          {"train_lr", format_real(m.lr)},
          {"train_epochs", std::to_string(m.epochs)},
          {"targets", join_ids(to.ids)},
          {"sample_n", std::to_string(to.sample_n)},
          {"sample_seed", std::to_string(to.sample_seed)},
          {"misclassified", to.misclassified ? "1" : "0"},
          {"method", eo.method},
          {"kappa", std::to_string(eo.opt.kappa)},
          {"lambda_pred", format_real(eo.opt.lambda_pred)},
          {"lambda_dist", format_real(eo.opt.lambda_dist)},
          {"lambda_plau", format_real(eo.opt.lambda_plau)},
          {"alpha_deg", format_real(eo.opt.alpha_deg)},
          {"alpha_motif", format_real(eo.opt.alpha_motif)},
          {"tau_plus", format_real(eo.opt.tau_plus)},
          {"tau_minus", format_real(eo.opt.tau_minus)},
          {"addition_cost", format_real(eo.opt.addition_cost)},
          {"deletion_cost", format_real(eo.opt.deletion_cost)},
          {"eta", format_real(eo.opt.learning_rate)},
          {"max_epochs", std::to_string(eo.opt.max_epochs)},
          {"stability_window", std::to_string(eo.opt.stability_window)},
          {"k_plau", format_real(eo.opt.k_plau)},
          {"gradient_additions", std::to_string(eo.cand.gradient_additions)},
          {"orbit_additions", std::to_string(eo.cand.orbit_additions)},
          {"far_sample", std::to_string(eo.cand.far_sample)},
          {"prune", eo.prune ? "1" : "0"},
          {"exhaust", eo.exhaust ? "1" : "0"},
          {"jobs", std::to_string(eo.jobs)},
          {"seeds", join_u64(eo.seeds)}};
}

struct SeedRun {
  std::uint64_t seed = 0;
  EvaluationReport report;
  std::vector<TargetRecord> records;
};

/// Runs one explainer over all seeds: per seed the model is loaded or trained,
/// targets selected, and every record written under seed_<s>/.
std::vector<SeedRun> run_explain(const Graph& g, const ModelOptions& m, const TargetOptions& to,
                                 const ExplainOptions& eo, const fs::path& out_dir) {
  std::vector<SeedRun> runs;
  for (std::uint64_t seed : eo.seeds) {
    GcnModel model = resolve_model(g, m, seed);
    std::vector<NodeId> targets = select_targets(model, g, to);
    if (targets.empty()) throw InputError("target selection produced no nodes");
    SeedRun run;
    run.seed = seed;
    run.records = explain_all(model, g, targets, eo, seed);
    run.report = aggregate(run.records);
    if (!out_dir.empty()) write_records(run.records, out_dir / ("seed_" + std::to_string(seed)));
    runs.push_back(std::move(run));
  }
  return runs;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / xs.size())};
}

void print_seed_summary(const std::vector<SeedRun>& runs) {
  auto line = [&](const std::string& name, auto pick) {
    std::vector<double> xs;
    for (const SeedRun& r : runs) xs.push_back(pick(r.report));
    auto [mean, sd] = mean_std(xs);
    std::cout << name << ": " << format_real(mean) << " +/- " << format_real(sd) << "\n";
  };
  line("misclass", [](const EvaluationReport& r) { return r.misclassification_rate; });
  line("fidelity", [](const EvaluationReport& r) { return r.fidelity; });
  line("de_total", [](const EvaluationReport& r) { return r.mean_size.value_or(0.0); });
  line("plausibility", [](const EvaluationReport& r) { return r.mean_plausibility; });
  line("time_sec", [](const EvaluationReport& r) { return r.mean_time_seconds; });
}

std::vector<TargetRecord> concat_records(const std::vector<SeedRun>& runs) {
  std::vector<TargetRecord> all;
  for (const SeedRun& r : runs)
    all.insert(all.end(), r.records.begin(), r.records.end());
  return all;
}

void write_summary(const std::vector<std::pair<std::string, EvaluationReport>>& rows,
                   const fs::path& out_dir) {
  std::string csv = summary_csv(rows);
  std::cout << csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "summary.csv");
    out << csv;
  }
}

// ---------------------------------------------------------------------------
// Theory ledger

struct LedgerLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

bool any_strict_subset_flips(const AdditiveModel& m) {
  int n = static_cast<int>(m.neighbor_weights.size());
  for (unsigned mask = 0; mask + 1 < (1u << n); ++mask) {
    std::vector<int> deleted;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) deleted.push_back(i);
    if (m.score_after_deletions(deleted) <= 0.0) return true;
  }
  return false;
}

std::vector<LedgerLine> theory_ledger(int model_count, std::uint64_t seed) {
  std::vector<LedgerLine> lines;

  {  // Deletion infeasibility: the analytic condition is exact.
    Rng rng(seed);
    int bad = 0;
    std::string witness;
    for (int i = 0; i < model_count; ++i) {
      AdditiveModel m = random_additive_model(rng, 12, 6);
      DeletionInfeasibility r = deletion_infeasible(m, false);
      if (r.infeasible == any_strict_subset_flips(m) && ++bad == 1)
        witness = "model " + std::to_string(i);
    }
    lines.push_back({"deletion-infeasibility", bad == 0,
                     std::to_string(model_count) + " models, " + std::to_string(bad) +
                         " counterexamples" + (bad ? " (first: " + witness + ")" : "")});
  }

  {  // Addition sufficiency: k+ additions of gain gamma flip, k+-1 do not.
    Rng rng(seed + 1);
    int bad = 0;
    for (int i = 0; i < model_count; ++i) {
      AdditiveModel m = random_additive_model(rng, 12, 6);
      double gamma = rng.real(0.05, 0.5);
      int k = addition_sufficiency_k(m, gamma);
      double s = m.score();
      bool ok = s - k * gamma <= 1e-12 && (k == 0 || s - (k - 1) * gamma > 0.0);
      bad += !ok;
    }
    lines.push_back({"addition-sufficiency", bad == 0,
                     std::to_string(model_count) + " models, " + std::to_string(bad) +
                         " counterexamples"});
  }

  {  // Dominance: in the regime, the addition budget flips but no deletion does.
    Rng rng(seed + 2);
    int bad = 0, in_regime = 0;
    for (int i = 0; i < model_count; ++i) {
      AdditiveModel m = random_additive_model(rng, 10, 8);
      if (m.candidate_gains.empty() || m.neighbor_weights.empty()) continue;
      if (!deletion_infeasible(m, false).infeasible) continue;
      double gamma = *std::min_element(m.candidate_gains.begin(), m.candidate_gains.end());
      int k = addition_sufficiency_k(m, gamma);
      if (k <= 0 || k > static_cast<int>(m.candidate_gains.size())) continue;
      if (k >= static_cast<int>(m.neighbor_weights.size())) continue;
      ++in_regime;
      Reachability r = budgeted_reachability(m, k);
      if (!r.checked || r.del_flips || !r.add_flips) ++bad;
    }
    lines.push_back({"budgeted-reachability-dominance", bad == 0 && in_regime > 0,
                     std::to_string(in_regime) + " regime models, " + std::to_string(bad) +
                         " counterexamples"});
  }

  {  // Latent stability: displacement under k additions stays below L*k for a
    // measured single-edge Lipschitz estimate on a trained toy model.
    Graph g = gen_ba_shapes(30, 3, 6, 5);
    assign_split(g, 0.8, 5);
    GcnModel model = GcnModel::init(g.node_count(), {16}, 4, 5);
    TrainConfig tc;
    tc.learning_rate = 5.0;
    tc.epochs = 200;
    train(model, g, tc);
    const NodeId v = 31;
    auto embed = [&](const Graph& gg) {
      ForwardTrace t = forward(model, normalize_adjacency(dense_adjacency(gg)),
                               feature_matrix(gg));
      return Vector(t.act.back().row(v));
    };
    Vector base = embed(g);
    Rng rng(seed + 3);
    auto random_addition = [&] {
      for (;;) {
        NodeId a = static_cast<NodeId>(rng.below(g.node_count()));
        NodeId b = static_cast<NodeId>(rng.below(g.node_count()));
        if (a != b && !g.has_edge(a, b)) return Edge(a, b);
      }
    };
    // L is measured over a fixed pool of single additions; the multi-edge
    // sets are drawn from the same pool so the per-edge displacement is
    // covered by the estimate.
    std::set<Edge> pool_set;
    while (pool_set.size() < 50) pool_set.insert(random_addition());
    std::vector<Edge> pool(pool_set.begin(), pool_set.end());
    double lipschitz = 0.0;
    for (const Edge& e : pool) {
      Perturbation p;
      p.additions = {e};
      lipschitz = std::max(lipschitz, (embed(g.apply(p)) - base).norm());
    }
    int bad = 0;
    for (int i = 0; i < 20; ++i) {
      std::set<Edge> adds;
      int k = 2 + static_cast<int>(rng.below(3));
      while (static_cast<int>(adds.size()) < k) adds.insert(pool[rng.below(pool.size())]);
      Perturbation p;
      p.additions.assign(adds.begin(), adds.end());
      double bound = latent_stability_bound(lipschitz, k);
      if ((embed(g.apply(p)) - base).norm() > 1.1 * bound) ++bad;
    }
    lines.push_back({"latent-stability", bad == 0 && lipschitz > 0.0,
                     "L=" + format_real(lipschitz) + ", " + std::to_string(bad) +
                         " bound violations over 20 edit sets"});
  }

  return lines;
}

// ---------------------------------------------------------------------------
// Command implementations

int cmd_explain(const std::string& data_dir, const DatasetOptions& d, const ModelOptions& m,
                const TargetOptions& to, const ExplainOptions& eo, const std::string& out) {
  Graph g = resolve_graph(data_dir, d);
  fs::path out_dir(out);
  std::vector<SeedRun> runs = run_explain(g, m, to, eo, out_dir);
  std::vector<std::pair<std::string, EvaluationReport>> rows;
  for (const SeedRun& r : runs)
    rows.emplace_back(eo.method + "-s" + std::to_string(r.seed), r.report);
  if (runs.size() > 1) rows.emplace_back(eo.method, aggregate(concat_records(runs)));
  write_summary(rows, out_dir);
  print_seed_summary(runs);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_kv_file(out_dir / "manifest.txt", "gnncf-run v1",
                  run_manifest_kvs("explain", data_dir, d, m, to, eo));
  }
  return 0;
}

template <typename Setting>
int run_sweep(const std::string& command, const std::vector<Setting>& settings,
              const std::function<void(ExplainOptions&, const Setting&)>& apply,
              const std::function<std::string(const Setting&)>& label,
              const std::string& data_dir, const DatasetOptions& d, const ModelOptions& m,
              const TargetOptions& to, const ExplainOptions& base, const std::string& out) {
  Graph g = resolve_graph(data_dir, d);
  fs::path out_dir(out);
  std::vector<std::pair<std::string, EvaluationReport>> rows;
  for (const Setting& s : settings) {
    ExplainOptions eo = base;
    apply(eo, s);
    fs::path sub = out_dir.empty() ? fs::path() : out_dir / label(s);
    std::vector<SeedRun> runs = run_explain(g, m, to, eo, sub);
    rows.emplace_back(label(s), aggregate(concat_records(runs)));
    if (!sub.empty())
      write_kv_file(sub / "manifest.txt", "gnncf-run v1",
                    run_manifest_kvs(command, data_dir, d, m, to, eo));
  }
  write_summary(rows, out_dir);
  return 0;
}

int cmd_evaluate(const std::string& records_dir, const std::string& out) {
  if (!fs::is_directory(records_dir)) throw ParseError("not a directory: " + records_dir);
  std::map<std::string, std::vector<TargetRecord>> by_method;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(records_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("target_", 0) == 0 && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  }
  if (files.empty()) throw ParseError("no target records under " + records_dir);
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    TargetRecord r = parse_record(ss.str());
    by_method[r.method].push_back(std::move(r));
  }
  std::vector<std::pair<std::string, EvaluationReport>> rows;
  for (const auto& [method, records] : by_method) rows.emplace_back(method, aggregate(records));
  write_summary(rows, fs::path(out));
  return 0;
}

int cmd_theory(int model_count, std::uint64_t seed) {
  std::vector<LedgerLine> lines = theory_ledger(model_count, seed);
  bool all_pass = true;
  for (const LedgerLine& l : lines) {
    std::cout << l.name << ": " << (l.pass ? "PASS" : "FAIL") << " (" << l.detail << ")\n";
    all_pass = all_pass && l.pass;
  }
  return all_pass ? 0 : 4;
}

int cmd_hypothesis1(const std::string& data_dir, const DatasetOptions& d, const ModelOptions& m,
                    const TargetOptions& to, const ExplainOptions& eo, const std::string& out) {
  Graph g = resolve_graph(data_dir, d);
  GcnModel model = resolve_model(g, m, eo.seeds.front());
  std::vector<NodeId> targets = select_targets(model, g, to);
  if (targets.empty()) throw InputError("target selection produced no nodes");
  CandidateConfig cc = eo.cand;
  cc.seed = eo.seeds.front();
  std::vector<Hypothesis1Row> rows = hypothesis1_experiment(model, g, targets, eo.opt.kappa, cc);

  std::ostringstream csv;
  csv << "target,attack_success,oracle_found,ged,mcs,gev\n";
  std::vector<double> gev_success, gev_failure;
  for (const Hypothesis1Row& r : rows) {
    csv << r.target << "," << (r.attack_success ? 1 : 0) << "," << (r.oracle_found ? 1 : 0)
        << "," << format_real(r.sim.ged) << "," << format_real(r.sim.mcs) << ","
        << format_real(r.sim.gev) << "\n";
    if (!r.oracle_found) continue;
    (r.attack_success ? gev_success : gev_failure).push_back(r.sim.gev);
  }
  std::cout << csv.str();
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream f(fs::path(out) / "hypothesis1.csv");
    f << csv.str();
    write_kv_file(fs::path(out) / "manifest.txt", "gnncf-run v1",
                  run_manifest_kvs("hypothesis1", data_dir, d, m, to, eo));
  }
  auto group = [](const std::vector<double>& xs) -> std::string {
    if (xs.empty()) return "n/a (0 targets)";
    return format_real(mean_std(xs).first) + " (n=" + std::to_string(xs.size()) + ")";
  };
  std::cout << "mean gev, attack success: " << group(gev_success) << "\n";
  std::cout << "mean gev, attack failure: " << group(gev_failure) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Option wiring

void add_dataset_options(CLI::App* c, DatasetOptions& d) {
  c->add_option("--generator", d.generator, "ba-shapes | tree-cycles | loan")
      ->check(CLI::IsMember({"ba-shapes", "tree-cycles", "loan"}));
  c->add_option("--base-nodes", d.base_nodes, "BA base graph size");
  c->add_option("--attach", d.attach, "BA attachment degree");
  c->add_option("--motifs", d.motifs, "number of house motifs");
  c->add_option("--tree-depth", d.tree_depth, "tree depth (tree-cycles)");
  c->add_option("--cycles", d.cycles, "number of cycles (tree-cycles)");
  c->add_option("--cycle-len", d.cycle_len, "cycle length (tree-cycles)");
  c->add_option("--applicants", d.applicants, "node count (loan)");
  c->add_option("--train-fraction", d.train_fraction, "train split fraction")
      ->check(CLI::Range(0.0, 1.0));
  c->add_option("--seed", d.seed, "dataset generation seed");
}

void add_model_options(CLI::App* c, ModelOptions& m) {
  c->add_option("--model", m.model_path, "load a saved model instead of training");
  c->add_option("--hidden", m.hidden, "hidden layer widths")->delimiter(',');
  c->add_option("--train-lr", m.lr, "training learning rate");
  c->add_option("--train-epochs", m.epochs, "training epochs");
}

void add_target_options(CLI::App* c, TargetOptions& to) {
  c->add_option("--targets", to.ids, "explicit target node ids")->delimiter(',');
  c->add_option("--sample", to.sample_n, "sample this many targets from the cohort");
  c->add_option("--sample-seed", to.sample_seed, "target sampling seed");
  c->add_flag("--misclassified", to.misclassified,
              "use the misclassified cohort instead of the correctly-classified one");
}

void add_explain_options(CLI::App* c, ExplainOptions& eo, bool* no_prune, bool* stop_at_flip) {
  c->add_option("--method", eo.method, "optimizer | random-deletion | greedy-deletion | "
                                       "attack-addition")
      ->check(CLI::IsMember(
          {"optimizer", "random-deletion", "greedy-deletion", "attack-addition"}));
  c->add_option("--kappa", eo.opt.kappa, "edit budget");
  c->add_option("--lambda-pred", eo.opt.lambda_pred, "prediction loss weight");
  c->add_option("--lambda-dist", eo.opt.lambda_dist, "distance loss weight");
  c->add_option("--lambda-plau", eo.opt.lambda_plau, "plausibility loss weight");
  c->add_option("--alpha-deg", eo.opt.alpha_deg, "degree anomaly weight");
  c->add_option("--alpha-motif", eo.opt.alpha_motif, "motif violation weight");
  c->add_option("--tau-plus", eo.opt.tau_plus, "addition threshold");
  c->add_option("--tau-minus", eo.opt.tau_minus, "deletion threshold");
  c->add_option("--addition-cost", eo.opt.addition_cost, "budget cost per addition");
  c->add_option("--deletion-cost", eo.opt.deletion_cost, "budget cost per deletion");
  c->add_option("--eta", eo.opt.learning_rate, "mask step size");
  c->add_option("--max-epochs", eo.opt.max_epochs, "mask optimization epochs");
  c->add_option("--stability-window", eo.opt.stability_window, "early-exit window");
  c->add_option("--k-plau", eo.opt.k_plau, "plausibility score sigmoid scale");
  c->add_option("--grad-additions", eo.cand.gradient_additions,
                "gradient-selected addition candidates");
  c->add_option("--orbit-additions", eo.cand.orbit_additions,
                "orbit-selected addition candidates");
  c->add_option("--far-sample", eo.cand.far_sample, "far-node pool for the gradient selector");
  c->add_flag("--no-prune", *no_prune, "skip the post-hoc minimality pass");
  c->add_flag("--stop-at-flip", *stop_at_flip,
              "attack-addition: stop at the first flip instead of exhausting the budget");
  c->add_option("--jobs", eo.jobs, "worker threads across targets")->check(CLI::PositiveNumber);
  c->add_option("--seeds", eo.seeds, "run seeds (model init/training and explainer)")
      ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual explanations for GCN node classification via "
               "hybrid edge additions and deletions"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key = value config file; flags take precedence");

  DatasetOptions d;
  ModelOptions m;
  TargetOptions to;
  ExplainOptions eo;
  bool no_prune = false;
  bool stop_at_flip = false;
  std::string data_dir, out_dir, records_dir, model_out;
  int theory_models = 10000;
  std::uint64_t theory_seed = 7;

  CLI::App* c_dataset = app.add_subcommand("dataset", "generate a synthetic dataset on disk");
  add_dataset_options(c_dataset, d);
  c_dataset->add_option("--out", out_dir, "output directory")->required();

  CLI::App* c_train = app.add_subcommand("train", "train a GCN and save the weights");
  add_dataset_options(c_train, d);
  c_train->add_option("--data", data_dir, "dataset directory (overrides the generator)");
  c_train->add_option("--hidden", m.hidden, "hidden layer widths")->delimiter(',');
  c_train->add_option("--train-lr", m.lr, "training learning rate");
  c_train->add_option("--train-epochs", m.epochs, "training epochs");
  c_train->add_option("--out", model_out, "model output file")->required();

  auto add_run_options = [&](CLI::App* c) {
    add_dataset_options(c, d);
    c->add_option("--data", data_dir, "dataset directory (overrides the generator)");
    add_model_options(c, m);
    add_target_options(c, to);
    add_explain_options(c, eo, &no_prune, &stop_at_flip);
    c->add_option("--out", out_dir, "output directory");
  };

  CLI::App* c_explain = app.add_subcommand("explain", "run an explainer over selected targets");
  add_run_options(c_explain);
  CLI::App* c_sweep_kappa =
      app.add_subcommand("sweep-kappa", "explain across budgets kappa in {1,3,5,10,15}");
  add_run_options(c_sweep_kappa);
  CLI::App* c_sweep_cost = app.add_subcommand(
      "sweep-cost", "explain across addition costs C in {0.5,1,2,5,10,21}");
  add_run_options(c_sweep_cost);
  CLI::App* c_sweep_alpha =
      app.add_subcommand("sweep-alpha", "explain across plausibility weight pairs");
  add_run_options(c_sweep_alpha);

  CLI::App* c_evaluate =
      app.add_subcommand("evaluate", "re-aggregate per-target records into a summary");
  c_evaluate->add_option("--records", records_dir, "directory holding target_*.txt records")
      ->required();
  c_evaluate->add_option("--out", out_dir, "output directory for summary.csv");

  CLI::App* c_theory =
      app.add_subcommand("theory", "check the additive-model propositions; nonzero exit on failure");
  c_theory->add_option("--models", theory_models, "random models per proposition")
      ->check(CLI::PositiveNumber);
  c_theory->add_option("--seed", theory_seed, "sampling seed");

  CLI::App* c_hyp = app.add_subcommand(
      "hypothesis1", "attack additions vs exhaustive minimal counterfactuals");
  add_run_options(c_hyp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  eo.prune = !no_prune;
  eo.exhaust = !stop_at_flip;

  try {
    if (c_dataset->parsed()) {
      Graph g = make_dataset(d);
      write_dataset(g, d, out_dir);
      std::cout << "wrote " << g.node_count() << " nodes, " << g.edge_count() << " edges to "
                << out_dir << "\n";
      return 0;
    }
    if (c_train->parsed()) {
      Graph g = resolve_graph(data_dir, d);
      int input_dim = g.features.empty() ? g.node_count() : g.feature_dim();
      GcnModel model = GcnModel::init(input_dim, m.hidden, g.class_count(), d.seed);
      TrainConfig tc;
      tc.learning_rate = m.lr;
      tc.epochs = m.epochs;
      tc.seed = d.seed;
      train(model, g, tc);
      auto [train_acc, test_acc] = accuracy(model, g);
      save_model(model, model_out, tc);
      std::cout << "train accuracy: " << format_real(train_acc) << "\n";
      std::cout << "test accuracy: " << format_real(test_acc) << "\n";
      return 0;
    }
    if (c_explain->parsed()) return cmd_explain(data_dir, d, m, to, eo, out_dir);
    if (c_sweep_kappa->parsed()) {
      return run_sweep<int>(
          "sweep-kappa", {1, 3, 5, 10, 15},
          [](ExplainOptions& o, const int& k) { o.opt.kappa = k; },
          [](const int& k) { return "kappa_" + std::to_string(k); }, data_dir, d, m, to, eo,
          out_dir);
    }
    if (c_sweep_cost->parsed()) {
      return run_sweep<double>(
          "sweep-cost", {0.5, 1.0, 2.0, 5.0, 10.0, 21.0},
          [](ExplainOptions& o, const double& c) { o.opt.addition_cost = c; },
          [](const double& c) {
            std::string s = format_real(c);
            std::replace(s.begin(), s.end(), '.', 'p');
            return "cost_" + s;
          },
          data_dir, d, m, to, eo, out_dir);
    }
    if (c_sweep_alpha->parsed()) {
      using Pair = std::pair<double, double>;
      return run_sweep<Pair>(
          "sweep-alpha", {{0.0, 0.0}, {1.5, 0.0}, {0.0, 1.0}, {1.5, 1.0}, {3.0, 2.0}},
          [](ExplainOptions& o, const Pair& a) {
            o.opt.alpha_deg = a.first;
            o.opt.alpha_motif = a.second;
          },
          [](const Pair& a) {
            auto fmt = [](double x) {
              std::string s = format_real(x);
              std::replace(s.begin(), s.end(), '.', 'p');
              return s;
            };
            return "alpha_" + fmt(a.first) + "_" + fmt(a.second);
          },
          data_dir, d, m, to, eo, out_dir);
    }
    if (c_evaluate->parsed()) return cmd_evaluate(records_dir, out_dir);
    if (c_theory->parsed()) return cmd_theory(theory_models, theory_seed);
    if (c_hyp->parsed()) return cmd_hypothesis1(data_dir, d, m, to, eo, out_dir);
  } catch (const InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const ContractError& e) {
    std::cerr << "internal contract violation: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
