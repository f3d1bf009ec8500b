#pragma once

#include "gnncf/candidates.hpp"
#include "gnncf/gcn.hpp"
#include "gnncf/graph.hpp"
#include "gnncf/optimizer.hpp"

#include <vector>

namespace gnncf {

struct PrunedResult {
  Perturbation perturbation;  // subset of the input edit set
  int removed_count = 0;
  std::vector<double> importance;  // psi_e, parallel to edits(input)
  int edges_tested = 0;
  int forward_passes = 0;
  bool flips = false;
};

/// Edits of a perturbation in a fixed order: additions first, then deletions,
/// each canonically sorted. Shared by importance_scores and prune_minimal.
std::vector<Edge> edit_order(const Perturbation& delta);

/// psi_e = |final-epoch gradient| of the slot backing each edit. Requires the
/// optimizer's gradient record; missing slots are a contract violation.
std::vector<double> importance_scores(const OptimizeResult& opt, const CandidateSet& candidates,
                                      const Perturbation& delta);

/// Greedy minimality pass: visit edits from least to most important and drop
/// an edit whenever the remainder still flips the prediction. Repeats until
/// no edit can be dropped, so the result is irreducible. Non-flipping input
/// is returned unchanged.
PrunedResult prune_minimal(const GcnModel& model, const Graph& g, NodeId v,
                           const CandidateSet& candidates, const Perturbation& delta,
                           const std::vector<double>& psi, const OptimizeResult* opt = nullptr);

}  // namespace gnncf
