#include "gnncf/baselines.hpp"

#include "gnncf/rng.hpp"

#include <algorithm>
#include <set>

namespace gnncf {

void validate_perturbation(const Graph& g, const Perturbation& delta, int kappa,
                           double addition_cost) {
  for (const Edge& e : delta.additions)
    if (g.has_edge(e.a, e.b))
      throw ContractError("illegal addition of existing edge " + std::to_string(e.a) + "-" +
                          std::to_string(e.b));
  for (const Edge& e : delta.deletions)
    if (!g.has_edge(e.a, e.b))
      throw ContractError("illegal deletion of absent edge " + std::to_string(e.a) + "-" +
                          std::to_string(e.b));
  std::set<Edge> all(delta.additions.begin(), delta.additions.end());
  for (const Edge& e : delta.deletions)
    if (!all.insert(e).second) throw ContractError("edit listed as both addition and deletion");
  if (all.size() != delta.size()) throw ContractError("duplicate edit in perturbation");
  double cost = addition_cost * static_cast<double>(delta.additions.size()) +
                static_cast<double>(delta.deletions.size());
  if (cost > static_cast<double>(kappa) + 1e-12)
    throw ContractError("perturbation exceeds budget kappa=" + std::to_string(kappa));
}

Perturbation random_deletion(const Graph& g, NodeId v, int model_depth, int kappa,
                             std::uint64_t seed) {
  if (kappa < 1) throw InputError("random_deletion: kappa must be >= 1");
  std::vector<Edge> local = deletion_candidates(g, model_depth, v);
  Rng rng(seed);
  for (std::size_t i = local.size(); i > 1; --i) std::swap(local[i - 1], local[rng.below(i)]);
  Perturbation p;
  for (std::size_t i = 0; i < local.size() && i < static_cast<std::size_t>(kappa); ++i)
    p.deletions.push_back(local[i]);
  std::sort(p.deletions.begin(), p.deletions.end());
  validate_perturbation(g, p, kappa);
  return p;
}

Perturbation greedy_gradient_deletion(const GcnModel& model, const Graph& g, NodeId v,
                                      int kappa) {
  if (kappa < 1) throw InputError("greedy_gradient_deletion: kappa must be >= 1");
  const int original = predict_node(model, g, v).predicted_class;
  Perturbation p;
  Graph current = g;
  for (int step = 0; step < kappa; ++step) {
    std::vector<Edge> local = deletion_candidates(current, model.num_layers(), v);
    if (local.empty()) break;
    Vector degrees;
    Matrix a_hat = normalize_adjacency(dense_adjacency(current), degrees);
    ForwardTrace t = forward(model, a_hat, feature_matrix(current), &degrees);
    if (prediction_from_trace(t, v, v).predicted_class != original) break;
    Matrix grad = grad_margin_wrt_adjacency(model, t, v);
    const Edge* best = nullptr;
    double best_g = 0.0;
    for (const Edge& e : local) {
      double ge = grad(e.a, e.b);
      if (ge > best_g || (best && ge == best_g && e < *best)) {
        best_g = ge;
        best = &e;
      }
    }
    if (!best) break;  // no positive-gradient deletion left
    p.deletions.push_back(*best);
    Perturbation one;
    one.deletions = {*best};
    current = current.apply(one);
  }
  std::sort(p.deletions.begin(), p.deletions.end());
  validate_perturbation(g, p, kappa);
  return p;
}

Perturbation attack_only_addition(const GcnModel& model, const Graph& g, NodeId v, int kappa,
                                  bool exhaust, const CandidateConfig& config) {
  if (kappa < 1) throw InputError("attack_only_addition: kappa must be >= 1");
  const int original = predict_node(model, g, v).predicted_class;
  Perturbation p;
  Graph current = g;
  for (int step = 0; step < kappa; ++step) {
    if (!exhaust && predict_node(model, current, v).predicted_class != original) break;
    auto cands = addition_candidates_gradient(model, current, v, 1, config);
    if (cands.empty()) break;
    p.additions.push_back(cands.front().edge);
    Perturbation one;
    one.additions = {cands.front().edge};
    current = current.apply(one);
  }
  std::sort(p.additions.begin(), p.additions.end());
  validate_perturbation(g, p, kappa);
  return p;
}

}  // namespace gnncf
