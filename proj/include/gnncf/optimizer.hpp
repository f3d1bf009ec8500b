#pragma once

#include "gnncf/candidates.hpp"
#include "gnncf/gcn.hpp"
#include "gnncf/graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gnncf {

/// Signed edit intensity per candidate slot, M_e in [-1,1]. Deletion slots
/// may only discretize to {-1,0}, addition slots to {+1,0}.
struct SignedMask {
  std::vector<double> values;
  std::vector<bool> is_addition;  // slot legality, mirrors the candidate set
};

struct OptimizerConfig {
  double lambda_pred = 1.5;
  double lambda_dist = 0.5;
  double lambda_plau = 0.5;
  double alpha_deg = 1.5;
  double alpha_motif = 1.0;
  double tau_plus = 0.5;
  double tau_minus = 0.5;
  int kappa = 5;
  double addition_cost = 1.0;  // C in the weighted budget C*|add| + |del| <= kappa
  double deletion_cost = 1.0;
  double learning_rate = 0.001;
  int max_epochs = 200;
  int stability_window = 5;  // consecutive epochs with an identical edit set
  double k_plau = 1.0;       // sigmoid scale for the plausibility score
  std::uint64_t seed = 102;

  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double pred = 0.0;
  double dist = 0.0;
  double plau = 0.0;
  double deg_anom = 0.0;
  double motif_viol = 0.0;
  bool flipped = false;
  int epoch = 0;
};

struct OptimizeResult {
  Perturbation perturbation;  // best-seen flipping edit set, or final iterate
  bool success = false;       // prediction flipped by `perturbation`
  std::vector<LossBreakdown> history;
  int epochs_used = 0;
  int original_class = 0;
  int flipped_class = 0;       // equals original_class when success == false
  int coerced_signs = 0;       // illegal-direction discretizations zeroed
  std::vector<double> final_gradient;  // |dL/dM_e| at the last epoch, per slot
  std::vector<double> final_mask;      // |M_e| at the last epoch, per slot
};

/// M_hat = +1 if M > tau_plus, -1 if M < -tau_minus, else 0; entries whose
/// sign is illegal for their slot are coerced to 0 (counted in `coerced`).
std::vector<int> threshold_mask(const SignedMask& mask, double tau_plus, double tau_minus,
                                int* coerced = nullptr);

/// Admits discretized slots in descending |M_e| while the weighted budget
/// addition_cost*|adds| + deletion_cost*|dels| <= kappa has room for them.
Perturbation topk_sparsify(const CandidateSet& candidates, const SignedMask& mask,
                           const std::vector<int>& m_hat, int kappa, double addition_cost,
                           double deletion_cost = 1.0);

/// 0 once the prediction flips; otherwise -log(1 - p_c + eps) where p_c is
/// the perturbed probability of the original class.
double loss_pred(const GcnModel& model, const Graph& g, NodeId v, const Perturbation& delta);

double loss_dist(const Perturbation& delta);
double relaxed_dist(const SignedMask& mask);

struct PlauParts {
  double plau = 0.0;
  double deg_anom = 0.0;
  double motif_viol = 0.0;
};

/// Degree-anomaly and clustering-violation sums over the local node set.
PlauParts loss_plau(const Graph& g, const std::vector<NodeId>& v_sub, const Perturbation& delta,
                    double alpha_deg, double alpha_motif);

/// One fractional adjacency entry: `value` in [0,1] replaces the 0/1 base
/// entry of `edge` in the relaxed plausibility surrogate.
struct RelaxedEntry {
  Edge edge;
  double value = 0.0;
};

/// Relaxed plausibility of a fractional edit assignment.
PlauParts relaxed_plau(const Graph& g, const std::vector<NodeId>& v_sub,
                       const std::vector<RelaxedEntry>& entries, double alpha_deg,
                       double alpha_motif);

/// Analytic partial derivative of the relaxed surrogate with respect to the
/// value of `slot` (which must be one of the entries), using sign(0) = 0 at
/// the kinks of the absolute-value terms.
double relaxed_plau_gradient(const Graph& g, const std::vector<NodeId>& v_sub,
                             const std::vector<RelaxedEntry>& entries, const Edge& slot,
                             double alpha_deg, double alpha_motif);

/// M <- clamp(M - eta * grad, -1, 1); straight-through update.
void ste_step(SignedMask& mask, const std::vector<double>& gradients, double eta,
              const CandidateSet& candidates);

/// Signed-mask optimization loop: threshold -> top-k sparsify -> evaluate the
/// composite loss -> straight-through update, with early exit once the
/// prediction is flipped and the discrete edit set has been stable.
OptimizeResult optimize(const GcnModel& model, const Graph& g, NodeId v,
                        const CandidateSet& candidates, const OptimizerConfig& config);

}  // namespace gnncf
