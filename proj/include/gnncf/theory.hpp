#pragma once

#include "gnncf/candidates.hpp"
#include "gnncf/gcn.hpp"
#include "gnncf/graph.hpp"
#include "gnncf/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gnncf {

/// Additive neighborhood scoring model: s(v) = bias + sum_u w_u * r_u with a
/// positive-score decision rule. Candidate additions each reduce the score by
/// their gain.
struct AdditiveModel {
  double bias = 0.0;
  std::vector<double> neighbor_weights;        // w_u >= 0
  std::vector<double> neighbor_contributions;  // r_u >= 0 under homophily
  std::vector<double> candidate_gains;         // gamma_u > 0 per addition candidate

  double score() const;
  /// Score after deleting the given neighbor subset (indices).
  double score_after_deletions(const std::vector<int>& deleted) const;
  bool homophilous() const;
};

AdditiveModel random_additive_model(Rng& rng, int max_neighbors, int max_candidates);

struct DeletionInfeasibility {
  bool infeasible = false;       // bias + min_u w_u*r_u > 0
  int min_term_index = -1;       // witness neighbor attaining the min term
  bool exhaustively_verified = false;  // all strict deletion subsets keep s > 0
};

/// Analytic deletion-infeasibility condition with optional exhaustive
/// verification over every strict deletion subset (|N(v)| <= 15).
DeletionInfeasibility deletion_infeasible(const AdditiveModel& m, bool verify = true);

/// k+ = ceil(s(v)/gamma): additions of gain >= gamma sufficient to flip.
int addition_sufficiency_k(const AdditiveModel& m, double gamma);

struct Reachability {
  bool checked = false;  // false when the homophily precondition fails
  bool del_flips = false;
  bool add_flips = false;
  std::string diagnostic;
};

/// Enumerates all deletion subsets and addition subsets of size <= k and
/// reports whether either reaches a non-positive score.
Reachability budgeted_reachability(const AdditiveModel& m, int k);

double latent_stability_bound(double lipschitz, int e_plus_size);

enum class EditFilter { All, DeletionsOnly, AdditionsOnly };

/// Exhaustive minimum-cardinality counterfactual over the candidate space:
/// subsets are tried in increasing size, lexicographic slot order, so the
/// first flipping subset is minimal and the tie-break deterministic. Refuses
/// when C(|S|, max_size) exceeds 10^6.
std::optional<Perturbation> brute_force_counterfactual(const GcnModel& model, const Graph& g,
                                                       NodeId v, const CandidateSet& candidates,
                                                       int max_size,
                                                       EditFilter filter = EditFilter::All);

}  // namespace gnncf
