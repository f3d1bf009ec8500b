#pragma once

#include "gnncf/gcn.hpp"
#include "gnncf/graph.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gnncf {

/// Occurrence counts of the 15 automorphism orbits of connected graphlets on
/// up to 4 nodes (orbit 0 = degree, 1/2 = path ends/middle, 3 = triangle,
/// 4..14 = the six 4-node graphlets).
struct OrbitProfile {
  NodeId node = 0;
  std::array<std::int64_t, 15> orbit_counts{};
};

std::vector<OrbitProfile> count_orbits(const Graph& g, const std::vector<NodeId>& nodes);

enum class Provenance { LocalDeletion, GradientAddition, OrbitAddition };

struct Candidate {
  Edge edge;
  bool is_addition = false;
  Provenance provenance = Provenance::LocalDeletion;
  double score = 0.0;  // |g_e| for gradient candidates, orbit score otherwise
};

/// Restricted search space S = S- u S+ around a target node.
struct CandidateSet {
  NodeId target = 0;
  std::vector<Candidate> candidates;  // deletions first, then additions
  std::vector<NodeId> local_nodes;    // (l+1)-hop ball plus addition endpoints
  bool truncated = false;             // fewer legal additions than requested
  std::string diagnostic;

  std::size_t deletion_count() const;
  std::size_t addition_count() const;
};

struct CandidateConfig {
  int gradient_additions = 8;
  int orbit_additions = 0;
  int far_sample = 128;  // far-node pool size for the gradient selector
  std::uint64_t seed = 102;
};

/// Existing edges induced by the (l+1)-hop neighborhood of v.
std::vector<Edge> deletion_candidates(const Graph& g, int model_depth, NodeId v);

/// Absent edges (v,u) ranked by most-negative margin gradient; pool is the
/// (l+2)-hop ball plus a seeded sample of far nodes. Non-negative-gradient
/// entries are filtered out.
std::vector<Candidate> addition_candidates_gradient(const GcnModel& model, const Graph& g,
                                                    NodeId v, int k,
                                                    const CandidateConfig& config,
                                                    bool* truncated = nullptr);

/// Addition endpoints among nodes whose predicted class differs from v's,
/// ranked by orbit role score: cosine similarity to a calibration centroid
/// when one is supplied, otherwise orbit-1 + orbit-3 counts.
std::vector<Candidate> addition_candidates_orbit(
    const GcnModel& model, const Graph& g, NodeId v, int k,
    const std::optional<std::array<double, 15>>& calibration_centroid = std::nullopt,
    std::string* diagnostic = nullptr);

/// Assembles the full candidate set for one target.
CandidateSet build_candidates(const GcnModel& model, const Graph& g, NodeId v,
                              const CandidateConfig& config);

/// Local optimization problem: relaxed adjacency over the candidate set's
/// node ordering, with exterior degree mass so the subgraph forward matches
/// the full graph bit-for-bit on the target's receptive field.
struct LocalProblem {
  std::vector<NodeId> nodes;       // global ids, position = local index
  std::vector<int> local_index;    // global id -> local index (-1 outside)
  Matrix base_adjacency;           // induced 0/1 entries
  Vector exterior_degree;          // global degree minus internal degree
  int target = 0;                  // local index of v
  // Per candidate: local endpoints, parallel to CandidateSet::candidates.
  std::vector<std::pair<int, int>> slots;

  int local_of(NodeId global) const;
};

LocalProblem build_local_adjacency(const Graph& g, NodeId v, int model_depth,
                                   const CandidateSet& candidates);

/// Candidate-set audit record (structured text), replayable.
std::string serialize_candidates(const CandidateSet& s);

}  // namespace gnncf
