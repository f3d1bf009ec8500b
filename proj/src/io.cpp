#include "gnncf/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gnncf {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  return out;
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void save_edge_list(const Graph& g, const std::string& path) {
  auto out = open_out(path);
  for (const Edge& e : g.edges()) out << e.a << " " << e.b << "\n";
}

Graph load_edge_list(const std::string& path, NodeId node_count) {
  auto in = open_in(path);
  std::vector<Edge> edges;
  std::set<Edge> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long u, v;
    if (!(ss >> u >> v)) fail(path, lineno, "malformed edge line '" + line + "'");
    std::string rest;
    if (ss >> rest) fail(path, lineno, "trailing tokens on edge line");
    if (u < 0 || v < 0 || u >= node_count || v >= node_count)
      fail(path, lineno, "dangling node id");
    if (u == v) fail(path, lineno, "self-loop");
    Edge e(static_cast<NodeId>(u), static_cast<NodeId>(v));
    if (!seen.insert(e).second) fail(path, lineno, "duplicate edge");
    edges.push_back(e);
  }
  return Graph(node_count, edges);
}

void save_features(const Graph& g, const std::string& path) {
  auto out = open_out(path);
  for (const auto& row : g.features) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << format_real(row[i]);
    }
    out << "\n";
  }
}

void load_features(Graph& g, const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
        if (used != tok.size()) fail(path, lineno, "malformed real '" + tok + "'");
      } catch (const std::invalid_argument&) {
        fail(path, lineno, "malformed real '" + tok + "'");
      }
    }
    if (row.empty()) fail(path, lineno, "empty feature row");
    if (dim == 0) dim = row.size();
    if (row.size() != dim) fail(path, lineno, "inconsistent feature dimension");
    rows.push_back(std::move(row));
  }
  if (static_cast<NodeId>(rows.size()) != g.node_count())
    throw ParseError(path + ": feature rows (" + std::to_string(rows.size()) +
                     ") != node count (" + std::to_string(g.node_count()) + ")");
  g.features = std::move(rows);
}

void save_labels(const Graph& g, const std::string& path) {
  auto out = open_out(path);
  for (NodeId v = 0; v < g.node_count(); ++v)
    out << v << " " << g.labels[v] << " " << (g.train_mask[v] ? 1 : 0) << "\n";
}

void load_labels(Graph& g, const std::string& path) {
  auto in = open_in(path);
  g.labels.assign(g.node_count(), 0);
  g.train_mask.assign(g.node_count(), false);
  std::vector<bool> seen(g.node_count(), false);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long v, y;
    int flag;
    if (!(ss >> v >> y >> flag)) fail(path, lineno, "malformed label line '" + line + "'");
    if (v < 0 || v >= g.node_count()) fail(path, lineno, "dangling node id");
    if (flag != 0 && flag != 1) fail(path, lineno, "train flag must be 0 or 1");
    if (seen[v]) fail(path, lineno, "duplicate node id");
    seen[v] = true;
    g.labels[v] = static_cast<int>(y);
    g.train_mask[v] = flag == 1;
  }
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (!seen[v]) throw ParseError(path + ": missing label for node " + std::to_string(v));
}

}  // namespace gnncf
