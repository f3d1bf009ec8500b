#include "gnncf/gcn.hpp"

#include "gnncf/io.hpp"
#include "gnncf/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace gnncf {

void GcnModel::check_chain() const {
  if (weights.empty()) throw ContractError("model has no layers");
  for (std::size_t l = 1; l < weights.size(); ++l)
    if (weights[l - 1].cols() != weights[l].rows())
      throw ContractError("layer dimension chain broken at layer " + std::to_string(l));
}

GcnModel GcnModel::init(int input_dim, const std::vector<int>& hidden_dims, int class_count,
                        std::uint64_t seed) {
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(class_count);
  Rng rng(seed);
  GcnModel m;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    double s = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
    Matrix w(dims[l], dims[l + 1]);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.real(-s, s);
    m.weights.push_back(std::move(w));
  }
  return m;
}

Matrix normalize_adjacency(const Matrix& adjacency, Vector& degrees_out,
                           const Vector* exterior_degree) {
  const auto n = adjacency.rows();
  if (adjacency.cols() != n) throw ContractError("adjacency not square");
  if (!adjacency.isApprox(adjacency.transpose(), 1e-12))
    throw ContractError("adjacency not symmetric");
  Matrix s = adjacency + Matrix::Identity(n, n);
  Vector d = s.rowwise().sum();
  if (exterior_degree) {
    if (exterior_degree->size() != n) throw ContractError("exterior degree size mismatch");
    d += *exterior_degree;
  }
  Vector inv_sqrt = d.array().sqrt().inverse();
  degrees_out = d;
  return inv_sqrt.asDiagonal() * s * inv_sqrt.asDiagonal();
}

Matrix normalize_adjacency(const Matrix& adjacency, const Vector* exterior_degree) {
  Vector d;
  return normalize_adjacency(adjacency, d, exterior_degree);
}

Matrix dense_adjacency(const Graph& g) {
  Matrix a = Matrix::Zero(g.node_count(), g.node_count());
  for (const Edge& e : g.edges()) {
    a(e.a, e.b) = 1.0;
    a(e.b, e.a) = 1.0;
  }
  return a;
}

Matrix feature_matrix(const Graph& g) {
  std::vector<NodeId> all(g.node_count());
  for (NodeId i = 0; i < g.node_count(); ++i) all[i] = i;
  return feature_matrix(g, all);
}

Matrix feature_matrix(const Graph& g, const std::vector<NodeId>& nodes) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  if (g.features.empty()) {
    // Featureless graph: one-hot identity rows in global id space.
    Matrix x = Matrix::Zero(n, g.node_count());
    for (Eigen::Index i = 0; i < n; ++i) x(i, nodes[i]) = 1.0;
    return x;
  }
  Matrix x(n, g.feature_dim());
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < g.feature_dim(); ++j) x(i, j) = g.features[nodes[i]][j];
  return x;
}

namespace {

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Vector row = z.row(i);
    double m = row.maxCoeff();
    Vector e = (row.array() - m).exp();
    p.row(i) = e / e.sum();
  }
  return p;
}

}  // namespace

ForwardTrace forward(const GcnModel& model, const Matrix& a_hat, const Matrix& x,
                     const Vector* degrees) {
  model.check_chain();
  if (x.cols() != model.input_dim()) throw ContractError("feature dimension mismatch");
  if (a_hat.rows() != x.rows()) throw ContractError("adjacency/feature row mismatch");
  ForwardTrace t;
  t.a_hat = a_hat;
  t.degrees = degrees ? *degrees : Vector();
  t.act.push_back(x);
  const int k = model.num_layers();
  for (int l = 0; l < k; ++l) {
    Matrix p = a_hat * (t.act[l] * model.weights[l]);
    t.pre.push_back(p);
    if (l + 1 < k) t.act.push_back(p.cwiseMax(0.0));
  }
  t.logits = t.pre.back();
  t.probs = softmax_rows(t.logits);
  return t;
}

Prediction prediction_from_trace(const ForwardTrace& trace, int row, NodeId node) {
  Prediction p;
  p.node = node;
  const auto c = trace.probs.cols();
  p.class_probs.resize(c);
  int best = 0;
  for (Eigen::Index j = 0; j < c; ++j) {
    p.class_probs[j] = trace.probs(row, j);
    if (trace.probs(row, j) > trace.probs(row, best)) best = static_cast<int>(j);
  }
  p.predicted_class = best;
  double second = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < c; ++j)
    if (j != best) second = std::max(second, trace.logits(row, j));
  p.margin = trace.logits(row, best) - second;
  return p;
}

Prediction predict_node(const GcnModel& model, const Graph& g, NodeId v) {
  g.check_node(v);
  ForwardTrace t = forward(model, normalize_adjacency(dense_adjacency(g)), feature_matrix(g));
  return prediction_from_trace(t, v, v);
}

double nll_and_weight_grads(const GcnModel& model, const ForwardTrace& trace,
                            const std::vector<int>& labels, const std::vector<bool>& mask,
                            std::vector<Matrix>& grads_out) {
  const int k = model.num_layers();
  const auto n = trace.probs.rows();
  int count = 0;
  double loss = 0.0;
  Matrix dlogits = Matrix::Zero(n, trace.probs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++count;
    loss -= std::log(std::max(trace.probs(i, labels[i]), 1e-300));
    dlogits.row(i) = trace.probs.row(i);
    dlogits(i, labels[i]) -= 1.0;
  }
  if (count == 0) throw InputError("no labeled training nodes");
  loss /= count;
  dlogits /= count;

  grads_out.assign(k, Matrix());
  Matrix dp = dlogits;
  for (int l = k - 1; l >= 0; --l) {
    // act may be a wide one-hot feature matrix: multiply a_hat into the small
    // factor first.
    grads_out[l] = trace.act[l].transpose() * (trace.a_hat.transpose() * dp);
    if (l > 0) {
      Matrix dh = trace.a_hat.transpose() * dp * model.weights[l].transpose();
      dp = dh.cwiseProduct((trace.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

std::vector<double> train(GcnModel& model, const Graph& g, const TrainConfig& config) {
  if (config.learning_rate <= 0.0) throw InputError("learning rate must be positive");
  bool any = false;
  for (bool b : g.train_mask) any = any || b;
  if (!any || g.labels.empty()) throw InputError("graph has no labeled training nodes");

  Matrix a_hat = normalize_adjacency(dense_adjacency(g));
  Matrix x = feature_matrix(g);
  std::vector<double> history;
  std::vector<Matrix> grads;
  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    ForwardTrace t = forward(model, a_hat, x);
    double loss = nll_and_weight_grads(model, t, g.labels, g.train_mask, grads);
    if (!std::isfinite(loss))
      throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
    history.push_back(loss);
    if (epoch == config.epochs) break;
    for (int l = 0; l < model.num_layers(); ++l)
      model.weights[l] -= config.learning_rate * grads[l];
  }
  return history;
}

Matrix grad_wrt_adjacency(const GcnModel& model, const ForwardTrace& trace, int row,
                          const Vector& dlogits, bool freeze_normalization) {
  const int k = model.num_layers();
  const auto n = trace.a_hat.rows();
  if (row < 0 || row >= n) throw ContractError("trace row out of range");
  if (dlogits.size() != model.class_count()) throw ContractError("dlogits size mismatch");
  if (trace.act.empty() || trace.act[0].rows() != n) throw ContractError("trace/model mismatch");

  Matrix dp = Matrix::Zero(n, model.class_count());
  dp.row(row) = dlogits.transpose();
  Matrix g_hat = Matrix::Zero(n, n);  // d(objective)/d(a_hat)
  for (int l = k - 1; l >= 0; --l) {
    g_hat += dp * (trace.act[l] * model.weights[l]).transpose();
    if (l > 0) {
      Matrix dh = trace.a_hat.transpose() * dp * model.weights[l].transpose();
      dp = dh.cwiseProduct((trace.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }

  if (trace.degrees.size() != n) throw ContractError("trace missing degree vector");
  const Vector& d = trace.degrees;
  Vector inv_sqrt = d.array().sqrt().inverse();

  // a_hat_ij = s_ij / sqrt(d_i d_j) with d_i = ext_i + sum_j s_ij. Perturbing
  // the pair (u,w) moves s_uw, s_wu and both degrees, so
  //   dm/dA_uw = (G_uw + G_wu)/sqrt(d_u d_w) - (c_u/d_u + c_w/d_w)/2,
  //   c_i = sum_j (G_ij + G_ji) a_hat_ij.
  Matrix out(n, n);
  if (freeze_normalization) {
    for (Eigen::Index u = 0; u < n; ++u)
      for (Eigen::Index w = 0; w < n; ++w)
        out(u, w) = (g_hat(u, w) + g_hat(w, u)) * inv_sqrt(u) * inv_sqrt(w);
    out.diagonal().setZero();
    return out;
  }
  Vector c = ((g_hat + g_hat.transpose()).cwiseProduct(trace.a_hat)).rowwise().sum();
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index w = 0; w < n; ++w)
      out(u, w) = (g_hat(u, w) + g_hat(w, u)) * inv_sqrt(u) * inv_sqrt(w) -
                  0.5 * (c(u) / d(u) + c(w) / d(w));
  out.diagonal().setZero();  // self-loops are not perturbable entries
  return out;
}

Matrix grad_margin_wrt_adjacency(const GcnModel& model, const ForwardTrace& trace, int row,
                                 bool freeze_normalization) {
  Prediction p = prediction_from_trace(trace, row, 0);
  int runner_up = p.predicted_class == 0 ? 1 : 0;
  for (Eigen::Index j = 0; j < trace.logits.cols(); ++j)
    if (j != p.predicted_class && trace.logits(row, j) > trace.logits(row, runner_up))
      runner_up = static_cast<int>(j);
  Vector dz = Vector::Zero(model.class_count());
  dz(p.predicted_class) = 1.0;
  dz(runner_up) = -1.0;
  return grad_wrt_adjacency(model, trace, row, dz, freeze_normalization);
}

void save_model(const GcnModel& model, const std::string& path, const TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "gcn-model v1\n";
  out << "layers " << model.num_layers() << "\n";
  out << "dims";
  out << " " << model.input_dim();
  for (const Matrix& w : model.weights) out << " " << w.cols();
  out << "\n";
  out << "train lr " << format_real(config.learning_rate) << " epochs " << config.epochs
      << " seed " << config.seed << "\n";
  for (const Matrix& w : model.weights) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        if (j) out << " ";
        out << format_real(w(i, j));
      }
      out << "\n";
    }
  }
}

GcnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "gcn-model v1") throw ParseError(path + ": unknown model format '" + line + "'");
  std::string tok;
  int layers = 0;
  in >> tok >> layers;
  if (tok != "layers" || layers < 1) throw ParseError(path + ": bad layer count");
  in >> tok;
  if (tok != "dims") throw ParseError(path + ": missing dims");
  std::vector<int> dims(layers + 1);
  for (int& d : dims) in >> d;
  in >> tok;  // "train"
  std::getline(in, line);
  GcnModel m;
  for (int l = 0; l < layers; ++l) {
    Matrix w(dims[l], dims[l + 1]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        if (!(in >> w(i, j))) throw ParseError(path + ": truncated weight matrix");
    m.weights.push_back(std::move(w));
  }
  m.check_chain();
  return m;
}

}  // namespace gnncf
