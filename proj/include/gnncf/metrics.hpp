#pragma once

#include "gnncf/candidates.hpp"
#include "gnncf/gcn.hpp"
#include "gnncf/graph.hpp"
#include "gnncf/optimizer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gnncf {

/// One explained target, in the record format shared by the optimizer and
/// every baseline.
struct TargetRecord {
  NodeId target = 0;
  std::string method;
  bool success = false;
  int original_class = 0;
  int new_class = 0;
  double original_prob = 0.0;   // probability of the original class, base graph
  double perturbed_prob = 0.0;  // probability of the original class, edited graph
  Perturbation perturbation;
  double plau_loss = 0.0;
  double plausibility = 0.0;  // S_plau of plau_loss
  double time_seconds = 0.0;
  int epochs_used = 0;
  // Pruning report (all zero when pruning was disabled).
  bool pruned = false;
  int prune_removed = 0;
  int prune_edges_tested = 0;
  int prune_forward_passes = 0;
  std::vector<LossBreakdown> history;
};

struct EvaluationReport {
  int n_targets = 0;
  int n_successes = 0;
  double misclassification_rate = 0.0;
  double fidelity = 0.0;
  // Explanation sizes are averaged over successes only and are absent when
  // there are none.
  std::optional<double> mean_size;
  std::optional<double> mean_additions;
  std::optional<double> mean_deletions;
  double mean_plausibility = 0.0;
  double mean_time_seconds = 0.0;
};

EvaluationReport aggregate(const std::vector<TargetRecord>& records);

double misclassification_rate(const std::vector<TargetRecord>& records);
double fidelity(const std::vector<TargetRecord>& records);

/// S_plau = 2 * (1 - 1/(1 + exp(-k * L_plau))), strictly decreasing in L.
double plausibility_score(double l_plau, double k = 1.0);

struct SimilarityTriple {
  double ged = 0.0;
  double mcs = 0.0;
  double gev = 0.0;
};

/// Similarity between two small edge sets. GED is exact (injective-mapping
/// search) and normalized by |Va|+|Vb|+|Ea|+|Eb|; MCS is the maximum common
/// edge count over |larger edge set|; GEV is the cosine of mean-pooled final
/// hidden-layer embeddings of the two subgraphs. Either side empty ->
/// ged=1, mcs=0, gev=0.
SimilarityTriple graph_similarity(const std::vector<Edge>& a, const std::vector<Edge>& b,
                                  const GcnModel* model = nullptr, const Graph* g = nullptr);

struct Hypothesis1Row {
  NodeId target = 0;
  bool attack_success = false;
  bool oracle_found = false;
  SimilarityTriple sim;
};

/// For each target: attack addition set (gradient greedy, flip-or-budget) vs
/// the exhaustive minimal counterfactual on the same candidate space.
std::vector<Hypothesis1Row> hypothesis1_experiment(const GcnModel& model, const Graph& g,
                                                   const std::vector<NodeId>& targets, int budget,
                                                   const CandidateConfig& config = {});

/// Structured-text per-target record; byte-deterministic for fixed inputs.
std::string serialize_record(const TargetRecord& r);
TargetRecord parse_record(const std::string& text);

/// Summary CSV row set; columns exactly:
/// method, misclass, fidelity, de_total, de_add, de_del, plausibility, time_sec
std::string summary_csv(const std::vector<std::pair<std::string, EvaluationReport>>& rows);

}  // namespace gnncf
