#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgraph/graph.hpp"

namespace hgraph {

struct CepsParams {
  double c = 0.85;             // fly-out probability
  double tol = 1e-9;           // L1 change that ends the power iteration
  std::size_t max_iter = 100;
  std::size_t budget = 20;     // total nodes in the output, queries included
  std::size_t max_path_len = 4;  // nodes per key path, endpoints included
  std::chrono::milliseconds time_budget{0};  // 0 disables the deadline

  // Throws std::invalid_argument.
  void validate(std::size_t query_count) const;
};

// Column-normalized adjacency: column j holds w(i, j) / sum_i w(i, j).
// Columns of isolated nodes are empty.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(const Graph& g);

  std::size_t size() const { return offsets_.size() - 1; }
  std::span<const Neighbor> column(NodeId j) const {
    return {entries_.data() + offsets_[j], offsets_[j + 1] - offsets_[j]};
  }
  bool dangling(NodeId j) const { return offsets_[j] == offsets_[j + 1]; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> entries_;  // (row, normalized weight)
};

inline TransitionMatrix normalize_columns(const Graph& g) { return TransitionMatrix(g); }

struct RwrResult {
  std::vector<double> scores;
  std::size_t iterations = 0;
  bool converged = false;
  double last_change = 0;
};

// Power iteration for r = c W r + (1 - c) e_q from r = e_q. Probability
// sitting on a dangling column restarts at q, which only matters when q itself
// is isolated.
RwrResult rwr(const TransitionMatrix& w, NodeId query, const CepsParams& params);

struct GoodnessScores {
  std::vector<NodeId> queries;
  std::vector<std::vector<double>> per_query;  // r(i, .)
  std::vector<double> combined;                // r(Q, .)
  bool converged = true;
  std::size_t max_iterations_used = 0;
};

// Elementwise product of the per-query vectors.
std::vector<double> combine(std::span<const std::vector<double>> per_query);

GoodnessScores goodness_scores(const TransitionMatrix& w, std::span<const NodeId> queries,
                               const CepsParams& params);

struct KeyPath {
  NodeId source = 0;
  NodeId destination = 0;
  std::vector<NodeId> nodes;  // source first, destination last
  double extracted = 0;       // sum of r(Q, .) over the path
  std::size_t new_nodes = 0;  // path nodes not yet in the output graph
  double score() const { return extracted / static_cast<double>(new_nodes); }
};

// Best downhill path (strictly decreasing r(source, .), ties by ascending
// node id) from `source` to `destination` with at most `max_len` nodes,
// maximizing extracted goodness per new node. Ties prefer fewer new nodes,
// then the lexicographically smallest node sequence. nullopt when no
// downhill path exists.
std::optional<KeyPath> single_key_path(const Graph& g, NodeId source, NodeId destination,
                                       std::span<const double> source_scores,
                                       std::span<const double> combined,
                                       const std::vector<bool>& in_output, std::size_t max_len);

struct CenterPiece {
  std::vector<NodeId> queries;
  std::vector<NodeId> nodes;  // ascending
  std::vector<EdgeRef> edges;  // induced from the host graph
  std::vector<KeyPath> key_paths;
  std::vector<double> combined;  // r(Q, .) over the host graph
  double total_goodness = 0;
  std::optional<double> iratio;
  CepsParams params;
  bool scores_converged = true;
  bool timed_out = false;
  std::size_t skipped_pairs = 0;  // (source, destination) pairs with no downhill path
  std::vector<std::string> warnings;
};

// Grows the output from the query nodes one destination at a time: the
// best-scoring node outside the output, reached by one key path per source.
// The budget is checked before each new destination, so the last sweep may
// overshoot by at most |Q| (max_path_len - 1) nodes.
CenterPiece extract(const Graph& g, std::span<const NodeId> queries, const GoodnessScores& scores,
                    const CepsParams& params);

// Scores then extracts.
CenterPiece center_piece(const Graph& g, std::span<const NodeId> queries, const CepsParams& params);

// sum over `nodes` of r(Q, j) divided by the sum over every node; nullopt
// when the denominator is zero.
std::optional<double> iratio(std::span<const NodeId> nodes, std::span<const double> combined);

}  // namespace hgraph
