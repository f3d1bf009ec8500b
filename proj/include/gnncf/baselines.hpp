#pragma once

#include "gnncf/candidates.hpp"
#include "gnncf/gcn.hpp"
#include "gnncf/graph.hpp"

#include <cstdint>

namespace gnncf {

/// Throws unless the edit set is legal against the base graph and fits the
/// weighted budget addition_cost*|adds| + |dels| <= kappa. Shared by the
/// optimizer tests and every baseline.
void validate_perturbation(const Graph& g, const Perturbation& delta, int kappa,
                           double addition_cost = 1.0);

/// kappa uniform-random deletions from the (model_depth+1)-hop local edges.
Perturbation random_deletion(const Graph& g, NodeId v, int model_depth, int kappa,
                             std::uint64_t seed);

/// Deletion-only greedy: repeatedly remove the local edge with the largest
/// positive margin gradient, recomputing after each edit; stops at a flip or
/// when the budget/candidates are exhausted.
Perturbation greedy_gradient_deletion(const GcnModel& model, const Graph& g, NodeId v, int kappa);

/// Attack-style addition-only greedy over gradient candidates. In exhaust
/// mode it keeps editing to the full budget even after the flip, mirroring
/// attack tools; otherwise it stops at the first flip.
Perturbation attack_only_addition(const GcnModel& model, const Graph& g, NodeId v, int kappa,
                                  bool exhaust, const CandidateConfig& config = {});

}  // namespace gnncf
