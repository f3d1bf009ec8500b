#include "gnncf/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>

namespace gnncf {

void OptimizerConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("optimizer config: " + what);
  };
  check(std::isfinite(lambda_pred) && lambda_pred >= 0, "lambda_pred must be finite and >= 0");
  check(std::isfinite(lambda_dist) && lambda_dist >= 0, "lambda_dist must be finite and >= 0");
  check(std::isfinite(lambda_plau) && lambda_plau >= 0, "lambda_plau must be finite and >= 0");
  check(std::isfinite(alpha_deg) && alpha_deg >= 0, "alpha_deg must be finite and >= 0");
  check(std::isfinite(alpha_motif) && alpha_motif >= 0, "alpha_motif must be finite and >= 0");
  check(tau_plus > 0 && tau_plus < 1, "tau_plus must lie in (0,1)");
  check(tau_minus > 0 && tau_minus < 1, "tau_minus must lie in (0,1)");
  check(kappa >= 1, "kappa must be >= 1");
  check(std::isfinite(addition_cost) && addition_cost > 0, "addition_cost must be > 0");
  check(std::isfinite(deletion_cost) && deletion_cost > 0, "deletion_cost must be > 0");
  check(std::isfinite(learning_rate) && learning_rate > 0, "learning_rate must be > 0");
  check(max_epochs >= 0, "max_epochs must be >= 0");
  check(stability_window >= 1, "stability_window must be >= 1");
  check(std::isfinite(k_plau) && k_plau > 0, "k_plau must be > 0");
}

std::vector<int> threshold_mask(const SignedMask& mask, double tau_plus, double tau_minus,
                                int* coerced) {
  if (mask.values.size() != mask.is_addition.size())
    throw ContractError("signed mask: values/slot-direction length mismatch");
  if (coerced) *coerced = 0;
  std::vector<int> out(mask.values.size(), 0);
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    int s = 0;
    if (mask.values[i] > tau_plus)
      s = 1;
    else if (mask.values[i] < -tau_minus)
      s = -1;
    // An existing edge cannot be added, an absent edge cannot be deleted.
    if ((s == 1 && !mask.is_addition[i]) || (s == -1 && mask.is_addition[i])) {
      s = 0;
      if (coerced) ++*coerced;
    }
    out[i] = s;
  }
  return out;
}

Perturbation topk_sparsify(const CandidateSet& candidates, const SignedMask& mask,
                           const std::vector<int>& m_hat, int kappa, double addition_cost,
                           double deletion_cost) {
  if (m_hat.size() != candidates.candidates.size() || mask.values.size() != m_hat.size())
    throw ContractError("topk_sparsify: slot count mismatch");
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < m_hat.size(); ++i)
    if (m_hat[i] != 0) active.push_back(i);
  std::stable_sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
    double ma = std::abs(mask.values[a]), mb = std::abs(mask.values[b]);
    if (ma != mb) return ma > mb;
    return candidates.candidates[a].edge < candidates.candidates[b].edge;
  });
  Perturbation delta;
  double budget = static_cast<double>(kappa);
  for (std::size_t i : active) {
    const Candidate& c = candidates.candidates[i];
    double cost = c.is_addition ? addition_cost : deletion_cost;
    if (cost > budget) continue;
    budget -= cost;
    (c.is_addition ? delta.additions : delta.deletions).push_back(c.edge);
  }
  std::sort(delta.additions.begin(), delta.additions.end());
  std::sort(delta.deletions.begin(), delta.deletions.end());
  return delta;
}

double loss_dist(const Perturbation& delta) { return static_cast<double>(delta.size()); }

double relaxed_dist(const SignedMask& mask) {
  double s = 0.0;
  for (double v : mask.values) s += std::abs(v);
  return s;
}

namespace {

constexpr double kEps = 1e-12;

/// Relaxed adjacency as a sparse overlay on the base graph: only the listed
/// unordered pairs differ from the 0/1 base entries.
struct Overlay {
  const Graph* g = nullptr;
  std::map<Edge, double> values;
  std::map<NodeId, std::vector<NodeId>> partners;

  void set(const Edge& e, double v) {
    if (values.emplace(e, v).second) {
      partners[e.a].push_back(e.b);
      partners[e.b].push_back(e.a);
    } else {
      values[e] = v;
    }
  }

  double entry(NodeId u, NodeId w) const {
    auto it = values.find(Edge(u, w));
    if (it != values.end()) return it->second;
    return g->has_edge(u, w) ? 1.0 : 0.0;
  }

  double degree(NodeId x) const {
    double d = g->degree(x);
    auto it = partners.find(x);
    if (it == partners.end()) return d;
    for (NodeId y : it->second) d += values.at(Edge(x, y)) - (g->has_edge(x, y) ? 1.0 : 0.0);
    return d;
  }

  std::vector<NodeId> neighborhood(NodeId x) const {
    std::vector<NodeId> out = g->neighbors(x);
    auto it = partners.find(x);
    if (it != partners.end())
      for (NodeId y : it->second)
        if (!g->has_edge(x, y)) out.push_back(y);
    std::sort(out.begin(), out.end());
    return out;
  }

  double triangle_mass(NodeId x) const {
    std::vector<NodeId> nbr = neighborhood(x);
    double t = 0.0;
    for (std::size_t i = 0; i < nbr.size(); ++i) {
      double axi = entry(x, nbr[i]);
      if (axi == 0.0) continue;
      for (std::size_t j = i + 1; j < nbr.size(); ++j) {
        double axj = entry(x, nbr[j]);
        if (axj == 0.0) continue;
        t += axi * axj * entry(nbr[i], nbr[j]);
      }
    }
    return t;
  }

  double clustering(NodeId x) const {
    double d = degree(x);
    if (d <= 1.0) return 0.0;
    return 2.0 * triangle_mass(x) / (d * (d - 1.0));
  }

  double deg_term(NodeId x) const {
    return std::abs(degree(x) - g->degree(x)) / (1.0 + g->degree(x));
  }

  double motif_term(NodeId x) const {
    return std::abs(clustering(x) - g->clustering_coefficient(x));
  }

  /// Nodes whose degree or triangle mass can differ from the base graph:
  /// endpoints of modified pairs plus their shared neighbors.
  std::set<NodeId> affected(const Edge& e) const {
    std::set<NodeId> out{e.a, e.b};
    for (NodeId y : neighborhood(e.a)) {
      if (y == e.b) continue;
      if (entry(y, e.b) > 0.0 || g->has_edge(y, e.b)) out.insert(y);
    }
    return out;
  }

  std::set<NodeId> affected_all() const {
    std::set<NodeId> out;
    for (const auto& [e, v] : values) {
      double base = g->has_edge(e.a, e.b) ? 1.0 : 0.0;
      if (v == base) continue;
      auto a = affected(e);
      out.insert(a.begin(), a.end());
    }
    return out;
  }
};

Overlay make_discrete_overlay(const Graph& g, const Perturbation& delta) {
  Overlay ov;
  ov.g = &g;
  for (const Edge& e : delta.additions) {
    if (g.has_edge(e.a, e.b)) throw ContractError("plausibility: addition already present");
    ov.set(e, 1.0);
  }
  for (const Edge& e : delta.deletions) {
    if (!g.has_edge(e.a, e.b)) throw ContractError("plausibility: deletion not present");
    ov.set(e, 0.0);
  }
  return ov;
}

PlauParts plau_from_overlay(const Overlay& ov, const std::vector<char>& in_vsub, double alpha_deg,
                            double alpha_motif) {
  PlauParts p;
  for (NodeId x : ov.affected_all()) {
    if (!in_vsub[x]) continue;
    p.deg_anom += ov.deg_term(x);
    p.motif_viol += ov.motif_term(x);
  }
  p.plau = alpha_deg * p.deg_anom + alpha_motif * p.motif_viol;
  return p;
}

std::vector<char> membership(const Graph& g, const std::vector<NodeId>& v_sub) {
  std::vector<char> in(g.node_count(), 0);
  for (NodeId v : v_sub) {
    g.check_node(v);
    in[v] = 1;
  }
  return in;
}

}  // namespace

PlauParts loss_plau(const Graph& g, const std::vector<NodeId>& v_sub, const Perturbation& delta,
                    double alpha_deg, double alpha_motif) {
  Overlay ov = make_discrete_overlay(g, delta);
  return plau_from_overlay(ov, membership(g, v_sub), alpha_deg, alpha_motif);
}

namespace {

Overlay make_relaxed_overlay(const Graph& g, const std::vector<RelaxedEntry>& entries) {
  Overlay ov;
  ov.g = &g;
  for (const RelaxedEntry& re : entries) {
    if (re.value < 0.0 || re.value > 1.0)
      throw InputError("relaxed entry value must lie in [0,1]");
    ov.set(re.edge, re.value);
  }
  return ov;
}

}  // namespace

PlauParts relaxed_plau(const Graph& g, const std::vector<NodeId>& v_sub,
                       const std::vector<RelaxedEntry>& entries, double alpha_deg,
                       double alpha_motif) {
  Overlay ov = make_relaxed_overlay(g, entries);
  return plau_from_overlay(ov, membership(g, v_sub), alpha_deg, alpha_motif);
}

double loss_pred(const GcnModel& model, const Graph& g, NodeId v, const Perturbation& delta) {
  int original = predict_node(model, g, v).predicted_class;
  Prediction after = predict_node(model, g.apply(delta), v);
  if (after.predicted_class != original) return 0.0;
  return -std::log(1.0 - after.class_probs[original] + kEps);
}

void ste_step(SignedMask& mask, const std::vector<double>& gradients, double eta,
              const CandidateSet& candidates) {
  if (gradients.size() != mask.values.size())
    throw ContractError("ste_step: gradient/slot count mismatch");
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    if (!std::isfinite(gradients[i])) {
      const Edge& e = candidates.candidates[i].edge;
      throw NumericalError("non-finite gradient at slot " + std::to_string(i) + " (edge " +
                           std::to_string(e.a) + "-" + std::to_string(e.b) + ")");
    }
    mask.values[i] = std::clamp(mask.values[i] - eta * gradients[i], -1.0, 1.0);
  }
}

namespace {

struct BestSeen {
  Perturbation delta;
  double plau = 0.0;
  int epoch = 0;
  int flipped_class = 0;
};

bool better(const Perturbation& delta, double plau, int epoch, const BestSeen& cur) {
  if (delta.size() != cur.delta.size()) return delta.size() < cur.delta.size();
  if (plau != cur.plau) return plau < cur.plau;
  return false;  // earlier epoch wins; later epochs never displace
}

bool same_perturbation(const Perturbation& a, const Perturbation& b) {
  return a.additions == b.additions && a.deletions == b.deletions;
}

inline double sign_of(double z) { return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0); }

/// Analytic partial derivatives of the relaxed plausibility surrogate, with
/// relaxed degrees, triangle masses and base clustering coefficients memoized
/// across slots so one epoch costs O(slots * degree) instead of
/// O(slots * degree^2).
struct PlauGradCache {
  const Overlay& ov;
  const std::vector<char>& in_vsub;
  double a_deg, a_motif;
  std::map<NodeId, double> deg_memo, tri_memo, base_c_memo;

  double deg_t(NodeId x) {
    auto [it, fresh] = deg_memo.try_emplace(x, 0.0);
    if (fresh) it->second = ov.degree(x);
    return it->second;
  }
  double tri_t(NodeId x) {
    auto [it, fresh] = tri_memo.try_emplace(x, 0.0);
    if (fresh) it->second = ov.triangle_mass(x);
    return it->second;
  }
  double base_c(NodeId x) {
    auto [it, fresh] = base_c_memo.try_emplace(x, 0.0);
    if (fresh) it->second = ov.g->clustering_coefficient(x);
    return it->second;
  }
  double clust_t(NodeId x) {
    double d = deg_t(x);
    if (d <= 1.0) return 0.0;
    return 2.0 * tri_t(x) / (d * (d - 1.0));
  }

  // d(deg_term + motif_term at endpoint u) / d a_uw
  double endpoint_term(NodeId u, NodeId w) {
    if (!in_vsub[u]) return 0.0;
    double grad =
        a_deg * sign_of(deg_t(u) - ov.g->degree(u)) / (1.0 + ov.g->degree(u));
    double d = deg_t(u);
    if (a_motif > 0.0 && d > 1.0) {
      // T(u) = a_uw * sum_y a_uy a_wy + terms independent of a_uw.
      double s = 0.0;
      for (NodeId y : ov.neighborhood(u)) {
        if (y == w) continue;
        double ay = ov.entry(u, y);
        if (ay == 0.0) continue;
        s += ay * ov.entry(w, y);
      }
      double den = d * (d - 1.0);
      double dc = (2.0 * s * den - 2.0 * tri_t(u) * (2.0 * d - 1.0)) / (den * den);
      grad += a_motif * sign_of(clust_t(u) - base_c(u)) * dc;
    }
    return grad;
  }

  double slot_gradient(const Edge& e) {
    double grad = endpoint_term(e.a, e.b) + endpoint_term(e.b, e.a);
    if (a_motif > 0.0) {
      // Shared neighbors: their triangle mass gains a_ya * a_yb * a_ab.
      for (NodeId y : ov.neighborhood(e.a)) {
        if (y == e.b || !in_vsub[y]) continue;
        double aya = ov.entry(e.a, y);
        if (aya == 0.0) continue;
        double ayb = ov.entry(e.b, y);
        if (ayb == 0.0) continue;
        double d = deg_t(y);
        if (d <= 1.0) continue;
        grad += a_motif * sign_of(clust_t(y) - base_c(y)) * 2.0 * aya * ayb / (d * (d - 1.0));
      }
    }
    return grad;
  }
};

}  // namespace

double relaxed_plau_gradient(const Graph& g, const std::vector<NodeId>& v_sub,
                             const std::vector<RelaxedEntry>& entries, const Edge& slot,
                             double alpha_deg, double alpha_motif) {
  Overlay ov = make_relaxed_overlay(g, entries);
  if (ov.values.find(slot) == ov.values.end())
    throw InputError("gradient slot is not one of the relaxed entries");
  std::vector<char> in_vsub = membership(g, v_sub);
  PlauGradCache cache{ov, in_vsub, alpha_deg, alpha_motif, {}, {}, {}};
  return cache.slot_gradient(slot);
}

OptimizeResult optimize(const GcnModel& model, const Graph& g, NodeId v,
                        const CandidateSet& candidates, const OptimizerConfig& config) {
  config.validate();
  g.check_node(v);
  if (candidates.target != v) throw ContractError("candidate set built for a different target");

  OptimizeResult result;
  LocalProblem lp = build_local_adjacency(g, v, model.num_layers(), candidates);
  Matrix x_local = feature_matrix(g, lp.nodes);

  auto local_forward = [&](const Matrix& adjacency) {
    Vector degrees;
    Matrix a_hat = normalize_adjacency(adjacency, degrees, &lp.exterior_degree);
    return forward(model, a_hat, x_local, &degrees);
  };

  ForwardTrace base_trace = local_forward(lp.base_adjacency);
  const int original = prediction_from_trace(base_trace, lp.target, v).predicted_class;
  result.original_class = original;
  result.flipped_class = original;

  const std::size_t n_slots = candidates.candidates.size();
  if (n_slots == 0) return result;

  SignedMask mask;
  mask.values.assign(n_slots, 0.0);
  mask.is_addition.resize(n_slots);
  for (std::size_t i = 0; i < n_slots; ++i)
    mask.is_addition[i] = candidates.candidates[i].is_addition;

  std::map<Edge, std::size_t> slot_of;
  for (std::size_t i = 0; i < n_slots; ++i) slot_of[candidates.candidates[i].edge] = i;

  std::vector<char> in_vsub = membership(g, candidates.local_nodes);

  std::optional<BestSeen> best;
  Perturbation prev_delta;
  int stable = 0;
  Perturbation last_delta;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    int coerced = 0;
    std::vector<int> m_hat = threshold_mask(mask, config.tau_plus, config.tau_minus, &coerced);
    result.coerced_signs += coerced;
    Perturbation delta = topk_sparsify(candidates, mask, m_hat, config.kappa,
                                       config.addition_cost, config.deletion_cost);

    // Straight-through forward: discrete edits pass through, gradients treat
    // the discretization as identity.
    Matrix a_tilde = lp.base_adjacency;
    for (const Edge& e : delta.additions) {
      auto [i, j] = lp.slots[slot_of.at(e)];
      a_tilde(i, j) = a_tilde(j, i) = 1.0;
    }
    for (const Edge& e : delta.deletions) {
      auto [i, j] = lp.slots[slot_of.at(e)];
      a_tilde(i, j) = a_tilde(j, i) = 0.0;
    }
    ForwardTrace trace = local_forward(a_tilde);
    Prediction pred = prediction_from_trace(trace, lp.target, v);
    bool flipped = pred.predicted_class != original;
    double p_orig = pred.class_probs[original];

    LossBreakdown lb;
    lb.epoch = epoch;
    lb.flipped = flipped;
    lb.pred = flipped ? 0.0 : -std::log(1.0 - p_orig + kEps);
    lb.dist = loss_dist(delta);
    PlauParts pp = loss_plau(g, candidates.local_nodes, delta, config.alpha_deg,
                             config.alpha_motif);
    lb.deg_anom = pp.deg_anom;
    lb.motif_viol = pp.motif_viol;
    lb.plau = pp.plau;
    lb.total = config.lambda_pred * lb.pred + config.lambda_dist * lb.dist +
               config.lambda_plau * lb.plau;
    result.history.push_back(lb);

    if (flipped && (!best || better(delta, lb.plau, epoch, *best)))
      best = BestSeen{delta, lb.plau, epoch, pred.predicted_class};

    if (same_perturbation(delta, prev_delta) && epoch > 1)
      ++stable;
    else
      stable = 1;
    prev_delta = delta;
    last_delta = delta;

    // Gradients (recorded even on the exit epoch: the pruner ranks by them).
    Vector dlogits = Vector::Zero(model.class_count());
    if (!flipped) {
      for (int c = 0; c < model.class_count(); ++c) {
        double d = (c == original ? 1.0 : 0.0) - pred.class_probs[c];
        dlogits(c) = p_orig * d / (1.0 - p_orig + kEps);
      }
    }
    Matrix g_pred = grad_wrt_adjacency(model, trace, lp.target, dlogits);

    Overlay relaxed;
    relaxed.g = &g;
    for (std::size_t i = 0; i < n_slots; ++i) {
      const Edge& e = candidates.candidates[i].edge;
      double base = mask.is_addition[i] ? 0.0 : 1.0;
      relaxed.set(e, std::clamp(base + mask.values[i], 0.0, 1.0));
    }

    PlauGradCache plau_grad{relaxed, in_vsub, config.alpha_deg, config.alpha_motif, {}, {}, {}};
    std::vector<double> grad(n_slots, 0.0);
    for (std::size_t i = 0; i < n_slots; ++i) {
      const Edge& e = candidates.candidates[i].edge;
      auto [li, lj] = lp.slots[i];
      double g_plau = config.lambda_plau == 0.0 ? 0.0 : plau_grad.slot_gradient(e);
      double g_dist = mask.values[i] > 0 ? 1.0 : (mask.values[i] < 0 ? -1.0 : 0.0);
      grad[i] = config.lambda_pred * g_pred(li, lj) + config.lambda_dist * g_dist +
                config.lambda_plau * g_plau;
    }
    result.final_gradient.assign(grad.size(), 0.0);
    result.final_mask.assign(n_slots, 0.0);
    for (std::size_t i = 0; i < n_slots; ++i) {
      result.final_gradient[i] = std::abs(grad[i]);
      result.final_mask[i] = std::abs(mask.values[i]);
    }

    result.epochs_used = epoch;
    if (flipped && stable >= config.stability_window) break;

    ste_step(mask, grad, config.learning_rate, candidates);
  }

  if (best) {
    result.perturbation = best->delta;
    result.success = true;
    result.flipped_class = best->flipped_class;
  } else {
    result.perturbation = last_delta;
    result.success = false;
  }
  return result;
}

}  // namespace gnncf
