#include <doctest.h>

#include "gnncf/candidates.hpp"
#include "gnncf/gcn.hpp"
#include "gnncf/optimizer.hpp"
#include "gnncf/pruner.hpp"
#include "gnncf/rng.hpp"
#include "gnncf/theory.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace gnncf;

namespace {

AdditiveModel make_model(double bias, std::vector<double> w, std::vector<double> r,
                         std::vector<double> gains) {
  AdditiveModel m;
  m.bias = bias;
  m.neighbor_weights = std::move(w);
  m.neighbor_contributions = std::move(r);
  m.candidate_gains = std::move(gains);
  return m;
}

/// Independent strict-subset enumeration: does any strict deletion subset
/// drive the score non-positive?
bool some_strict_subset_flips(const AdditiveModel& m) {
  const int n = static_cast<int>(m.neighbor_weights.size());
  for (unsigned mask = 0; mask + 1 < (1u << n); ++mask) {
    std::vector<int> deleted;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) deleted.push_back(i);
    if (m.score_after_deletions(deleted) <= 0.0) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("deletion infeasibility condition and witness") {
  // bias 0.2 with three 0.3 terms: every strict subset keeps s >= 0.5.
  AdditiveModel a = make_model(0.2, {0.3, 0.3, 0.3}, {1, 1, 1}, {0.1});
  DeletionInfeasibility da = deletion_infeasible(a);
  CHECK(da.infeasible);
  CHECK(da.exhaustively_verified);
  CHECK(da.min_term_index == 0);

  AdditiveModel b = make_model(-0.4, {0.3, 0.5}, {1, 1}, {0.1});
  DeletionInfeasibility db = deletion_infeasible(b);
  CHECK_FALSE(db.infeasible);
  CHECK_FALSE(db.exhaustively_verified);

  // Witness index picks the smallest w*r term.
  AdditiveModel c = make_model(0.5, {0.9, 0.1, 0.4}, {1, 1, 1}, {0.1});
  CHECK(deletion_infeasible(c).min_term_index == 1);

  AdditiveModel no_neighbors = make_model(0.3, {}, {}, {0.1});
  CHECK(deletion_infeasible(no_neighbors).infeasible);

  AdditiveModel too_big = make_model(10.0, std::vector<double>(16, 0.5),
                                     std::vector<double>(16, 1.0), {0.1});
  CHECK_THROWS_AS(deletion_infeasible(too_big), InputError);
  CHECK(deletion_infeasible(too_big, false).infeasible);

  AdditiveModel broken = make_model(0.1, {0.3}, {1, 1}, {0.1});
  CHECK_THROWS_AS(deletion_infeasible(broken), ContractError);
}

TEST_CASE("analytic infeasibility agrees with subset enumeration on 1000 models") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    AdditiveModel m = random_additive_model(rng, 8, 6);
    bool infeasible = deletion_infeasible(m).infeasible;
    // The condition is exact: infeasible iff no strict deletion subset flips.
    CHECK(infeasible == !some_strict_subset_flips(m));
  }
}

TEST_CASE("addition sufficiency k+ = ceil(score/gamma)") {
  AdditiveModel m = make_model(1.1, {}, {}, {0.4});
  CHECK(addition_sufficiency_k(m, 0.4) == 3);
  CHECK(addition_sufficiency_k(make_model(0.4, {}, {}, {0.4}), 0.4) == 1);
  CHECK(addition_sufficiency_k(make_model(-0.2, {}, {}, {0.4}), 0.4) == 0);
  CHECK_THROWS_AS(addition_sufficiency_k(m, 0.0), InputError);

  // Random models: k+ additions of gain exactly gamma always flip, and k+ is
  // tight (k+ - 1 such additions never do).
  Rng rng(22);
  for (int trial = 0; trial < 2000; ++trial) {
    AdditiveModel r = random_additive_model(rng, 6, 6);
    double gamma = rng.real(0.05, 0.5);
    int k = addition_sufficiency_k(r, gamma);
    double s = r.score();
    if (s <= 0.0) {
      CHECK(k == 0);
      continue;
    }
    CHECK(s - k * gamma <= 0.0);
    CHECK(s - (k - 1) * gamma > 0.0);
  }
}

TEST_CASE("budgeted reachability: additions dominate deletions") {
  SUBCASE("six-neighbor star example") {
    AdditiveModel m = make_model(0.2, std::vector<double>(6, 1.0),
                                 std::vector<double>(6, 0.1), {0.5, 0.5});
    CHECK(m.score() == doctest::Approx(0.8));
    CHECK(deletion_infeasible(m).infeasible);
    CHECK(addition_sufficiency_k(m, 0.5) == 2);
    Reachability r = budgeted_reachability(m, 2);
    CHECK(r.checked);
    CHECK_FALSE(r.del_flips);
    CHECK(r.add_flips);
  }

  SUBCASE("homophily violation gates the check") {
    AdditiveModel m = make_model(0.2, {0.5, 0.3}, {0.4, -0.1}, {0.5});
    Reachability r = budgeted_reachability(m, 1);
    CHECK_FALSE(r.checked);
    CHECK_FALSE(r.del_flips);
    CHECK_FALSE(r.add_flips);
    CHECK(r.diagnostic.find("homophily") != std::string::npos);
  }

  SUBCASE("dominance regime holds on 500 random models") {
    Rng rng(23);
    int confirmed = 0;
    for (int trial = 0; trial < 200000 && confirmed < 500; ++trial) {
      AdditiveModel m = random_additive_model(rng, 8, 12);
      if (!deletion_infeasible(m, false).infeasible) continue;
      double gamma = *std::min_element(m.candidate_gains.begin(), m.candidate_gains.end());
      int k = addition_sufficiency_k(m, gamma);
      if (k == 0 || k > static_cast<int>(m.candidate_gains.size())) continue;
      // Dominance regime: the budget must not allow deleting the whole
      // neighborhood, which would reduce the score to the bare bias.
      if (k >= static_cast<int>(m.neighbor_weights.size())) continue;
      Reachability r = budgeted_reachability(m, k);
      REQUIRE(r.checked);
      CHECK_FALSE(r.del_flips);
      CHECK(r.add_flips);
      ++confirmed;
    }
    CHECK(confirmed == 500);
  }
}

TEST_CASE("latent stability bound") {
  CHECK(latent_stability_bound(0.7, 0) == 0.0);
  CHECK(latent_stability_bound(0.5, 3) == doctest::Approx(1.5));
  CHECK_THROWS_AS(latent_stability_bound(-0.1, 1), InputError);
  CHECK_THROWS_AS(latent_stability_bound(0.1, -1), InputError);
}

TEST_CASE("embedding displacement stays under the measured Lipschitz bound") {
  Graph g = gen_ba_shapes(30, 3, 6, 5);
  assign_split(g, 0.8, 5);
  GcnModel model = GcnModel::init(g.node_count(), {16}, 4, 5);
  TrainConfig tc;
  tc.epochs = 200;
  tc.learning_rate = 5.0;
  train(model, g, tc);

  const NodeId v = 31;
  auto embedding = [&](const Graph& graph) {
    ForwardTrace t =
        forward(model, normalize_adjacency(dense_adjacency(graph)), feature_matrix(graph));
    return Vector(t.act.back().row(v));
  };
  Vector base = embedding(g);

  // Measure the per-edge displacement over 50 random single additions.
  Rng rng(6);
  double lipschitz = 0.0;
  std::vector<Edge> pool;
  for (NodeId u = 0; u < g.node_count(); ++u)
    if (u != v && !g.has_edge(u, v)) pool.push_back(Edge(u, v));
  REQUIRE(pool.size() >= 50);
  for (int i = 0; i < 50; ++i) {
    Perturbation p;
    p.additions = {pool[rng.below(pool.size())]};
    double d = (embedding(g.apply(p)) - base).norm();
    lipschitz = std::max(lipschitz, d);
  }
  CHECK(lipschitz > 0.0);

  // Addition sets of size 2..4 stay under L * |E+| (with slack for the
  // empirical estimate).
  for (int trial = 0; trial < 20; ++trial) {
    std::set<Edge> chosen;
    int size = 2 + static_cast<int>(rng.below(3));
    while (static_cast<int>(chosen.size()) < size) chosen.insert(pool[rng.below(pool.size())]);
    Perturbation p;
    p.additions.assign(chosen.begin(), chosen.end());
    double d = (embedding(g.apply(p)) - base).norm();
    CHECK(d <= latent_stability_bound(1.1 * lipschitz, size));
  }
}

TEST_CASE("brute-force counterfactual oracle") {
  // Applicant-style toy: the target's own cluster cannot be cut loose (the
  // self-loop keeps its features), but one peer addition into the heavier
  // opposite cluster flips it.
  Graph g(5, {Edge(0, 4), Edge(1, 2), Edge(1, 3), Edge(2, 3)});
  g.features = {{1, 0}, {0, 3}, {0, 3}, {0, 3}, {1, 0}};
  g.labels = {0, 1, 1, 1, 0};
  g.train_mask.assign(5, true);
  GcnModel model = GcnModel::init(2, {}, 2, 7);
  model.weights[0] = Matrix::Identity(2, 2);

  CandidateSet s;
  s.target = 0;
  s.candidates = {{Edge(0, 4), false, Provenance::LocalDeletion, 0.0},
                  {Edge(0, 1), true, Provenance::GradientAddition, 0.0},
                  {Edge(0, 2), true, Provenance::GradientAddition, 0.0}};
  std::set<NodeId> nodes{0, 1, 2, 3, 4};
  s.local_nodes.assign(nodes.begin(), nodes.end());

  SUBCASE("minimal set is a single peer addition") {
    auto cf = brute_force_counterfactual(model, g, 0, s, 3);
    REQUIRE(cf.has_value());
    CHECK(cf->size() == 1);
    CHECK(cf->deletions.empty());
    REQUIRE(cf->additions.size() == 1);
    // Lexicographic tie-break: slot order puts Edge(0,1) before Edge(0,2).
    CHECK(cf->additions[0] == Edge(0, 1));

    // Inclusion-minimality: the empty set does not flip.
    CHECK(predict_node(model, g, 0).predicted_class == 0);
  }

  SUBCASE("deletions alone cannot flip") {
    CHECK_FALSE(brute_force_counterfactual(model, g, 0, s, 3, EditFilter::DeletionsOnly)
                    .has_value());
    auto adds = brute_force_counterfactual(model, g, 0, s, 3, EditFilter::AdditionsOnly);
    REQUIRE(adds.has_value());
    CHECK(adds->additions == std::vector<Edge>{Edge(0, 1)});
  }

  SUBCASE("empty filtered candidate space yields absence") {
    CandidateSet dels_only = s;
    dels_only.candidates.resize(1);
    CHECK_FALSE(brute_force_counterfactual(model, g, 0, dels_only, 3).has_value());
    CHECK_FALSE(
        brute_force_counterfactual(model, g, 0, dels_only, 3, EditFilter::AdditionsOnly)
            .has_value());
  }

  SUBCASE("combinatorial guard refuses oversized spaces") {
    CandidateSet huge;
    huge.target = 0;
    for (NodeId a = 0; a < 100; ++a)
      huge.candidates.push_back({Edge(a, a + 200), true, Provenance::GradientAddition, 0.0});
    CHECK_THROWS_AS(brute_force_counterfactual(model, g, 0, huge, 5), InputError);
    CHECK_THROWS_AS(brute_force_counterfactual(model, g, 0, s, 0), InputError);
  }
}

TEST_CASE("oracle agrees with optimizer plus pruner on small instances") {
  Graph g = gen_ba_shapes(25, 3, 5, 11);
  assign_split(g, 0.8, 11);
  GcnModel model = GcnModel::init(g.node_count(), {16}, 4, 11);
  TrainConfig tc;
  tc.epochs = 200;
  tc.learning_rate = 5.0;
  train(model, g, tc);

  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  int checked = 0;
  for (NodeId v = 25; v < g.node_count() && checked < 5; ++v) {
    if (predict_node(model, g, v).predicted_class != g.labels[v]) continue;
    CandidateSet s = build_candidates(model, g, v, CandidateConfig{});
    if (s.candidates.empty() || s.candidates.size() > 20) continue;
    OptimizeResult opt = optimize(model, g, v, s, cfg);
    if (!opt.success) continue;
    std::vector<double> psi = importance_scores(opt, s, opt.perturbation);
    PrunedResult pr = prune_minimal(model, g, v, s, opt.perturbation, psi, &opt);
    auto oracle = brute_force_counterfactual(model, g, v, s,
                                             static_cast<int>(pr.perturbation.size()));
    REQUIRE(oracle.has_value());
    CHECK(oracle->size() <= pr.perturbation.size());
    ++checked;
  }
  CHECK(checked >= 2);
}
