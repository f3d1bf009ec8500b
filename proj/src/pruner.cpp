#include "gnncf/pruner.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace gnncf {

std::vector<Edge> edit_order(const Perturbation& delta) {
  std::vector<Edge> edits = delta.additions;
  std::sort(edits.begin(), edits.end());
  std::vector<Edge> dels = delta.deletions;
  std::sort(dels.begin(), dels.end());
  edits.insert(edits.end(), dels.begin(), dels.end());
  return edits;
}

namespace {

std::size_t slot_for(const CandidateSet& candidates, const Edge& e) {
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i)
    if (candidates.candidates[i].edge == e) return i;
  throw ContractError("edit edge " + std::to_string(e.a) + "-" + std::to_string(e.b) +
                      " is not a candidate slot");
}

}  // namespace

std::vector<double> importance_scores(const OptimizeResult& opt, const CandidateSet& candidates,
                                      const Perturbation& delta) {
  if (opt.final_gradient.size() != candidates.candidates.size())
    throw ContractError("importance_scores: missing final-epoch gradient record");
  std::vector<double> psi;
  for (const Edge& e : edit_order(delta)) psi.push_back(opt.final_gradient[slot_for(candidates, e)]);
  return psi;
}

PrunedResult prune_minimal(const GcnModel& model, const Graph& g, NodeId v,
                           const CandidateSet& candidates, const Perturbation& delta,
                           const std::vector<double>& psi, const OptimizeResult* opt) {
  PrunedResult result;
  result.perturbation = delta;
  result.importance = psi;

  std::vector<Edge> edits = edit_order(delta);
  if (psi.size() != edits.size())
    throw ContractError("prune_minimal: importance/edit count mismatch");

  LocalProblem lp = build_local_adjacency(g, v, model.num_layers(), candidates);
  Matrix x_local = feature_matrix(g, lp.nodes);
  std::map<Edge, std::size_t> slot_of;
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i)
    slot_of[candidates.candidates[i].edge] = i;

  auto flips_with = [&](const std::vector<char>& keep) {
    Matrix a_tilde = lp.base_adjacency;
    for (std::size_t i = 0; i < edits.size(); ++i) {
      if (!keep[i]) continue;
      auto [li, lj] = lp.slots[slot_of.at(edits[i])];
      bool is_add = candidates.candidates[slot_of.at(edits[i])].is_addition;
      a_tilde(li, lj) = a_tilde(lj, li) = is_add ? 1.0 : 0.0;
    }
    Vector degrees;
    Matrix a_hat = normalize_adjacency(a_tilde, degrees, &lp.exterior_degree);
    ForwardTrace trace = forward(model, a_hat, x_local, &degrees);
    ++result.forward_passes;
    return prediction_from_trace(trace, lp.target, v).predicted_class;
  };

  std::vector<char> keep(edits.size(), 1);
  std::vector<char> none(edits.size(), 0);
  const int original = flips_with(none);
  if (flips_with(keep) == original) {
    // Non-flipping input: pruning is a no-op.
    result.flips = false;
    return result;
  }
  result.flips = true;

  // Visit least-important first: reverse of the (psi desc, |M| desc, edge id
  // asc) importance ranking.
  std::vector<std::size_t> order(edits.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (psi[a] != psi[b]) return psi[a] < psi[b];
    if (opt) {
      double ma = opt->final_mask[slot_of.at(edits[a])];
      double mb = opt->final_mask[slot_of.at(edits[b])];
      if (ma != mb) return ma < mb;
    }
    return edits[b] < edits[a];
  });

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i : order) {
      if (!keep[i]) continue;
      keep[i] = 0;
      ++result.edges_tested;
      if (flips_with(keep) != original) {
        ++result.removed_count;
        changed = true;
      } else {
        keep[i] = 1;
      }
    }
  }

  Perturbation pruned;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    if (!keep[i]) continue;
    bool is_add = candidates.candidates[slot_of.at(edits[i])].is_addition;
    (is_add ? pruned.additions : pruned.deletions).push_back(edits[i]);
  }
  std::sort(pruned.additions.begin(), pruned.additions.end());
  std::sort(pruned.deletions.begin(), pruned.deletions.end());
  result.perturbation = pruned;
  return result;
}

}  // namespace gnncf
