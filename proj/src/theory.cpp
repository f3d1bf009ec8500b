#include "gnncf/theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace gnncf {

double AdditiveModel::score() const {
  double s = bias;
  for (std::size_t i = 0; i < neighbor_weights.size(); ++i)
    s += neighbor_weights[i] * neighbor_contributions[i];
  return s;
}

double AdditiveModel::score_after_deletions(const std::vector<int>& deleted) const {
  double s = score();
  for (int i : deleted) s -= neighbor_weights[i] * neighbor_contributions[i];
  return s;
}

bool AdditiveModel::homophilous() const {
  for (double r : neighbor_contributions)
    if (r < 0.0) return false;
  for (double w : neighbor_weights)
    if (w < 0.0) return false;
  return true;
}

AdditiveModel random_additive_model(Rng& rng, int max_neighbors, int max_candidates) {
  AdditiveModel m;
  m.bias = rng.real(-1.0, 1.0);
  int n = 1 + static_cast<int>(rng.below(max_neighbors));
  for (int i = 0; i < n; ++i) {
    m.neighbor_weights.push_back(rng.real(0.0, 1.0));
    m.neighbor_contributions.push_back(rng.real(0.0, 1.0));
  }
  int c = 1 + static_cast<int>(rng.below(max_candidates));
  for (int i = 0; i < c; ++i) m.candidate_gains.push_back(rng.real(1e-6, 0.5));
  return m;
}

DeletionInfeasibility deletion_infeasible(const AdditiveModel& m, bool verify) {
  if (m.neighbor_weights.size() != m.neighbor_contributions.size())
    throw ContractError("additive model: weight/contribution length mismatch");
  DeletionInfeasibility out;
  if (m.neighbor_weights.empty()) {
    out.infeasible = m.bias > 0.0;
    return out;
  }
  double min_term = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.neighbor_weights.size(); ++i) {
    double term = m.neighbor_weights[i] * m.neighbor_contributions[i];
    if (term < min_term) {
      min_term = term;
      out.min_term_index = static_cast<int>(i);
    }
  }
  out.infeasible = m.bias + min_term > 0.0;
  if (out.infeasible && verify) {
    const int n = static_cast<int>(m.neighbor_weights.size());
    if (n > 15) throw InputError("deletion_infeasible: exhaustive check limited to 15 neighbors");
    // Every strict deletion subset keeps at least one neighbor.
    for (unsigned mask = 0; mask + 1 < (1u << n); ++mask) {
      std::vector<int> deleted;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) deleted.push_back(i);
      if (m.score_after_deletions(deleted) <= 0.0)
        throw ContractError("deletion_infeasible: exhaustive check found a flipping subset");
    }
    out.exhaustively_verified = true;
  }
  return out;
}

int addition_sufficiency_k(const AdditiveModel& m, double gamma) {
  if (!(gamma > 0.0)) throw InputError("addition_sufficiency_k: gamma must be > 0");
  double s = m.score();
  if (s <= 0.0) return 0;
  int k = static_cast<int>(std::ceil(s / gamma));
  if (s - k * gamma > 0.0) throw ContractError("addition_sufficiency_k: simulation failed");
  return k;
}

Reachability budgeted_reachability(const AdditiveModel& m, int k) {
  Reachability out;
  if (!m.homophilous()) {
    out.diagnostic = "homophily precondition violated (negative weight or contribution)";
    return out;
  }
  out.checked = true;
  const int n = static_cast<int>(m.neighbor_weights.size());
  if (n > 20) throw InputError("budgeted_reachability: enumeration limited to 20 neighbors");
  for (unsigned mask = 0; mask < (1u << n) && !out.del_flips; ++mask) {
    if (static_cast<int>(std::popcount(mask)) > k) continue;
    std::vector<int> deleted;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) deleted.push_back(i);
    if (m.score_after_deletions(deleted) <= 0.0) out.del_flips = true;
  }
  const int c = static_cast<int>(m.candidate_gains.size());
  if (c > 20) throw InputError("budgeted_reachability: enumeration limited to 20 candidates");
  for (unsigned mask = 0; mask < (1u << c) && !out.add_flips; ++mask) {
    if (static_cast<int>(std::popcount(mask)) > k) continue;
    double s = m.score();
    for (int i = 0; i < c; ++i)
      if (mask & (1u << i)) s -= m.candidate_gains[i];
    if (s <= 0.0) out.add_flips = true;
  }
  return out;
}

double latent_stability_bound(double lipschitz, int e_plus_size) {
  if (lipschitz < 0.0 || e_plus_size < 0)
    throw InputError("latent_stability_bound: nonnegative arguments required");
  return lipschitz * e_plus_size;
}

std::optional<Perturbation> brute_force_counterfactual(const GcnModel& model, const Graph& g,
                                                       NodeId v, const CandidateSet& candidates,
                                                       int max_size, EditFilter filter) {
  if (max_size < 1) throw InputError("brute_force_counterfactual: max_size must be >= 1");
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
    bool add = candidates.candidates[i].is_addition;
    if (filter == EditFilter::DeletionsOnly && add) continue;
    if (filter == EditFilter::AdditionsOnly && !add) continue;
    slots.push_back(i);
  }
  const int n = static_cast<int>(slots.size());
  if (n == 0) return std::nullopt;
  max_size = std::min(max_size, n);
  // Combinatorial guard.
  double combos = 1.0;
  for (int i = 0; i < max_size; ++i) combos = combos * (n - i) / (i + 1);
  if (combos > 1e6)
    throw InputError("brute_force_counterfactual: C(" + std::to_string(n) + "," +
                     std::to_string(max_size) + ") exceeds 10^6");

  LocalProblem lp = build_local_adjacency(g, v, model.num_layers(), candidates);
  Matrix x_local = feature_matrix(g, lp.nodes);
  auto predict_with = [&](const std::vector<int>& chosen) {
    Matrix a = lp.base_adjacency;
    for (int idx : chosen) {
      auto [i, j] = lp.slots[slots[idx]];
      a(i, j) = a(j, i) = candidates.candidates[slots[idx]].is_addition ? 1.0 : 0.0;
    }
    Vector degrees;
    Matrix a_hat = normalize_adjacency(a, degrees, &lp.exterior_degree);
    ForwardTrace t = forward(model, a_hat, x_local, &degrees);
    return prediction_from_trace(t, lp.target, v).predicted_class;
  };
  const int original = predict_with({});

  // Sizes ascending, combinations in lexicographic slot order: the first hit
  // is minimum-cardinality with a deterministic tie-break.
  for (int size = 1; size <= max_size; ++size) {
    std::vector<int> chosen(size);
    std::iota(chosen.begin(), chosen.end(), 0);
    while (true) {
      if (predict_with(chosen) != original) {
        Perturbation p;
        for (int idx : chosen) {
          const Candidate& c = candidates.candidates[slots[idx]];
          (c.is_addition ? p.additions : p.deletions).push_back(c.edge);
        }
        std::sort(p.additions.begin(), p.additions.end());
        std::sort(p.deletions.begin(), p.deletions.end());
        return p;
      }
      int i = size - 1;
      while (i >= 0 && chosen[i] == n - size + i) --i;
      if (i < 0) break;
      ++chosen[i];
      for (int j = i + 1; j < size; ++j) chosen[j] = chosen[j - 1] + 1;
    }
  }
  return std::nullopt;
}

}  // namespace gnncf
