#pragma once

#include "gnncf/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace gnncf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// K-layer GCN: H^(l+1) = ReLU(A_hat H^(l) W^(l)) on hidden layers,
/// Z = softmax(A_hat H^(K-1) W^(K-1)).
struct GcnModel {
  std::vector<Matrix> weights;  // W^(l): d_l x d_{l+1}

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return static_cast<int>(weights.front().rows()); }
  int class_count() const { return static_cast<int>(weights.back().cols()); }

  void check_chain() const;

  /// Glorot-uniform initialization, deterministic per seed.
  static GcnModel init(int input_dim, const std::vector<int>& hidden_dims, int class_count,
                       std::uint64_t seed);
};

struct ForwardTrace {
  Matrix a_hat;              // normalized adjacency over the active node set
  Vector degrees;            // self-loop-augmented degrees used by a_hat
  std::vector<Matrix> pre;   // pre-activations per layer
  std::vector<Matrix> act;   // act[0] = X, act[l] = ReLU(pre[l-1]) for hidden layers
  Matrix logits;
  Matrix probs;              // softmax rows
};

struct Prediction {
  NodeId node = 0;
  std::vector<double> class_probs;
  int predicted_class = 0;
  double margin = 0.0;  // predicted-class logit minus best competing logit
};

/// D^{-1/2} (A + I) D^{-1/2}. `exterior_degree`, when given, adds per-node
/// degree mass from edges outside the matrix so that a subgraph forward
/// reproduces full-graph normalization exactly.
Matrix normalize_adjacency(const Matrix& adjacency, const Vector* exterior_degree = nullptr);

/// As above but also reports the augmented degree vector.
Matrix normalize_adjacency(const Matrix& adjacency, Vector& degrees_out,
                           const Vector* exterior_degree = nullptr);

/// Dense 0/1 adjacency of the whole graph.
Matrix dense_adjacency(const Graph& g);

/// Node features as a matrix; featureless graphs get one-hot identity rows
/// (column space = global node ids), so subgraph forwards stay consistent.
Matrix feature_matrix(const Graph& g);
Matrix feature_matrix(const Graph& g, const std::vector<NodeId>& nodes);

ForwardTrace forward(const GcnModel& model, const Matrix& a_hat, const Matrix& x,
                     const Vector* degrees = nullptr);

/// Argmax with smallest-index tie-break, and the logit margin.
Prediction prediction_from_trace(const ForwardTrace& trace, int row, NodeId node);

Prediction predict_node(const GcnModel& model, const Graph& g, NodeId v);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 300;
  std::uint64_t seed = 102;
};

/// Full-batch gradient descent on the NLL over labeled training nodes.
/// Returns the per-epoch loss history (epochs+1 entries, index 0 = initial).
std::vector<double> train(GcnModel& model, const Graph& g, const TrainConfig& config);

/// NLL over train nodes plus analytic weight gradients (finite-difference
/// tested); used by train() and exposed for the gradient oracle suite.
double nll_and_weight_grads(const GcnModel& model, const ForwardTrace& trace,
                            const std::vector<int>& labels, const std::vector<bool>& mask,
                            std::vector<Matrix>& grads_out);

/// Backpropagates an arbitrary per-class gradient at one output row down to
/// the raw adjacency entries, chaining analytically through the degree
/// normalization (optionally frozen for ablation). The returned matrix is
/// symmetric: entry (i,j) is the derivative treating the unordered pair as a
/// single variable.
Matrix grad_wrt_adjacency(const GcnModel& model, const ForwardTrace& trace, int row,
                          const Vector& dlogits, bool freeze_normalization = false);

/// d margin(v) / d A_e for every entry of the trace's adjacency.
Matrix grad_margin_wrt_adjacency(const GcnModel& model, const ForwardTrace& trace, int row,
                                 bool freeze_normalization = false);

void save_model(const GcnModel& model, const std::string& path, const TrainConfig& config);
GcnModel load_model(const std::string& path);

}  // namespace gnncf
