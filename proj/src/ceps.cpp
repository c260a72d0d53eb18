#include "hgraph/ceps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hgraph {

void CepsParams::validate(std::size_t query_count) const {
  if (!(c > 0 && c < 1)) throw std::invalid_argument("fly-out probability c must be in (0, 1)");
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  if (max_iter == 0) throw std::invalid_argument("max_iter must be positive");
  if (max_path_len < 2) throw std::invalid_argument("path length must be at least 2 nodes");
  if (budget < query_count) {
    throw std::invalid_argument("budget " + std::to_string(budget) + " is below the " +
                                std::to_string(query_count) + " query nodes");
  }
}

TransitionMatrix::TransitionMatrix(const Graph& g) : offsets_(g.node_count() + 1, 0) {
  entries_.reserve(2 * g.edge_count());
  for (NodeId j = 0; j < g.node_count(); ++j) {
    const Weight total = g.weighted_degree(j);
    for (const auto& nb : g.neighbors(j)) entries_.push_back({nb.node, nb.w / total});
    offsets_[j + 1] = entries_.size();
  }
}

RwrResult rwr(const TransitionMatrix& w, NodeId query, const CepsParams& params) {
  const std::size_t n = w.size();
  if (query >= n) throw std::out_of_range("query node " + std::to_string(query) + " not in graph");
  RwrResult out;
  std::vector<double> r(n, 0.0), next(n, 0.0);
  r[query] = 1.0;
  for (std::size_t it = 1; it <= params.max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double stranded = 0;
    for (NodeId j = 0; j < n; ++j) {
      const double mass = r[j];
      if (mass == 0) continue;
      if (w.dangling(j)) {
        stranded += mass;
        continue;
      }
      for (const auto& e : w.column(j)) next[e.node] += params.c * e.w * mass;
    }
    next[query] += (1 - params.c) + params.c * stranded;
    double change = 0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - r[i]);
    r.swap(next);
    out.iterations = it;
    out.last_change = change;
    if (change < params.tol) {
      out.converged = true;
      break;
    }
  }
  out.scores = std::move(r);
  return out;
}

std::vector<double> combine(std::span<const std::vector<double>> per_query) {
  if (per_query.empty()) return {};
  std::vector<double> out = per_query.front();
  for (std::size_t q = 1; q < per_query.size(); ++q) {
    if (per_query[q].size() != out.size()) throw std::invalid_argument("score vectors differ in length");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= per_query[q][j];
  }
  return out;
}

GoodnessScores goodness_scores(const TransitionMatrix& w, std::span<const NodeId> queries,
                               const CepsParams& params) {
  GoodnessScores s;
  s.queries.assign(queries.begin(), queries.end());
  for (NodeId q : queries) {
    auto res = rwr(w, q, params);
    s.converged = s.converged && res.converged;
    s.max_iterations_used = std::max(s.max_iterations_used, res.iterations);
    s.per_query.push_back(std::move(res.scores));
  }
  s.combined = combine(s.per_query);
  return s;
}

std::optional<KeyPath> single_key_path(const Graph& g, NodeId source, NodeId destination,
                                       std::span<const double> source_scores,
                                       std::span<const double> combined,
                                       const std::vector<bool>& in_output, std::size_t max_len) {
  const std::size_t n = g.node_count();
  if (source >= n || destination >= n) throw std::out_of_range("path endpoint not in graph");
  if (source == destination) throw std::invalid_argument("destination equals source");
  if (max_len < 2) throw std::invalid_argument("path length must be at least 2 nodes");

  // Total downhill order: higher score first, equal scores by ascending id.
  auto above = [&](NodeId a, NodeId b) {
    return source_scores[a] != source_scores[b] ? source_scores[a] > source_scores[b] : a < b;
  };
  if (source_scores[destination] <= 0 || !above(source, destination)) return std::nullopt;

  std::vector<NodeId> order;
  for (NodeId u = 0; u < n; ++u) {
    bool from_source = u == source || above(source, u);
    bool to_destination = u == destination || above(u, destination);
    if (from_source && to_destination) order.push_back(u);
  }
  std::sort(order.begin(), order.end(), above);
  constexpr std::int32_t kOut = -1;
  std::vector<std::int32_t> pos(n, kOut);
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = static_cast<std::int32_t>(i);

  // State (length, new, position): best extracted sum of a downhill path
  // from the source with `length` nodes of which `new` are outside H.
  const std::size_t m = order.size();
  const std::size_t L = max_len;
  constexpr double kNeg = -std::numeric_limits<double>::infinity();
  auto cell = [&](std::size_t len, std::size_t s, std::size_t p) { return (len * (L + 1) + s) * m + p; };
  std::vector<double> best((L + 1) * (L + 1) * m, kNeg);
  std::vector<std::int32_t> back((L + 1) * (L + 1) * m, kOut);

  auto path_of = [&](std::size_t len, std::size_t s, std::size_t p) {
    std::vector<NodeId> path;
    while (true) {
      NodeId v = order[p];
      path.push_back(v);
      std::int32_t prev = back[cell(len, s, p)];
      if (prev == kOut) break;
      s -= in_output[v] ? 0 : 1;
      --len;
      p = static_cast<std::size_t>(prev);
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  best[cell(1, in_output[source] ? 0 : 1, 0)] = combined[source];
  for (std::size_t p = 1; p < m; ++p) {
    const NodeId v = order[p];
    const std::size_t fresh = in_output[v] ? 0 : 1;
    for (const auto& nb : g.neighbors(v)) {
      const std::int32_t up = pos[nb.node];
      if (up == kOut || static_cast<std::size_t>(up) >= p) continue;
      for (std::size_t len = 2; len <= L; ++len) {
        for (std::size_t s = fresh; s <= len; ++s) {
          const double prev = best[cell(len - 1, s - fresh, static_cast<std::size_t>(up))];
          if (prev == kNeg) continue;
          const double cand = prev + combined[v];
          double& slot = best[cell(len, s, p)];
          std::int32_t& from = back[cell(len, s, p)];
          bool take = cand > slot;
          if (!take && cand == slot) {
            // Same sum: keep the lexicographically smaller prefix.
            take = path_of(len - 1, s - fresh, static_cast<std::size_t>(up)) <
                   path_of(len - 1, s - fresh, static_cast<std::size_t>(from));
          }
          if (take) {
            slot = cand;
            from = up;
          }
        }
      }
    }
  }

  const std::size_t last = m - 1;  // destination sorts last
  std::optional<KeyPath> out;
  for (std::size_t len = 2; len <= L; ++len) {
    for (std::size_t s = 1; s <= len; ++s) {
      const double value = best[cell(len, s, last)];
      if (value == kNeg) continue;
      KeyPath cand{source, destination, path_of(len, s, last), value, s};
      if (!out) {
        out = std::move(cand);
        continue;
      }
      const double a = cand.score();
      const double b = out->score();
      bool better = a > b;
      if (a == b) {
        better = cand.new_nodes < out->new_nodes ||
                 (cand.new_nodes == out->new_nodes && cand.nodes < out->nodes);
      }
      if (better) out = std::move(cand);
    }
  }
  return out;
}

std::optional<double> iratio(std::span<const NodeId> nodes, std::span<const double> combined) {
  double total = 0;
  for (double x : combined) total += x;
  if (total <= 0) return std::nullopt;
  double inside = 0;
  for (NodeId v : nodes) inside += combined[v];
  return inside / total;
}

CenterPiece extract(const Graph& g, std::span<const NodeId> queries, const GoodnessScores& scores,
                    const CepsParams& params) {
  params.validate(queries.size());
  const std::size_t n = g.node_count();
  if (queries.empty()) throw std::invalid_argument("query set is empty");
  if (scores.per_query.size() != queries.size() || scores.combined.size() != n) {
    throw std::invalid_argument("scores do not match the query set");
  }
  CenterPiece out;
  out.params = params;
  out.queries.assign(queries.begin(), queries.end());
  out.combined = scores.combined;
  out.scores_converged = scores.converged;
  for (double x : scores.combined) out.total_goodness += x;

  std::vector<bool> in_output(n, false);
  std::size_t size = 0;
  for (NodeId q : queries) {
    if (q >= n) throw std::out_of_range("query node " + std::to_string(q) + " not in graph");
    if (in_output[q]) throw std::invalid_argument("query node " + std::to_string(q) + " repeated");
    in_output[q] = true;
    ++size;
  }
  if (!scores.converged) out.warnings.push_back("random walk did not converge within max_iter");

  constexpr std::size_t kMaxWarnings = 16;
  auto warn = [&](std::string msg) {
    if (out.warnings.size() < kMaxWarnings) out.warnings.push_back(std::move(msg));
  };
  const auto start = std::chrono::steady_clock::now();
  std::vector<bool> unreachable(n, false);
  std::size_t destinations = 0;
  while (size < params.budget) {
    if (params.time_budget.count() > 0 && std::chrono::steady_clock::now() - start > params.time_budget) {
      out.timed_out = true;
      warn("time budget exhausted");
      break;
    }
    std::optional<NodeId> pd;
    for (NodeId j = 0; j < n; ++j) {
      if (in_output[j] || unreachable[j] || scores.combined[j] <= 0) continue;
      if (!pd || scores.combined[j] > scores.combined[*pd]) pd = j;
    }
    if (!pd) break;
    ++destinations;
    bool reached = false;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      auto path = single_key_path(g, queries[i], *pd, scores.per_query[i], scores.combined, in_output,
                                  params.max_path_len);
      if (!path) {
        ++out.skipped_pairs;
        warn("no downhill path from " + std::to_string(queries[i]) + " to " + std::to_string(*pd));
        continue;
      }
      for (NodeId v : path->nodes) {
        if (!in_output[v]) {
          in_output[v] = true;
          ++size;
        }
      }
      out.key_paths.push_back(std::move(*path));
      reached = true;
    }
    if (!reached) unreachable[*pd] = true;
  }
  if (destinations == 0 && size < params.budget) {
    warn("query nodes are disconnected from the rest of the graph");
  }

  for (NodeId v = 0; v < n; ++v) {
    if (!in_output[v]) continue;
    out.nodes.push_back(v);
    for (const auto& nb : g.neighbors(v)) {
      if (nb.node > v && in_output[nb.node]) out.edges.push_back({v, nb.node, nb.w});
    }
  }
  out.iratio = iratio(out.nodes, scores.combined);
  return out;
}

CenterPiece center_piece(const Graph& g, std::span<const NodeId> queries, const CepsParams& params) {
  params.validate(queries.size());
  TransitionMatrix w(g);
  auto scores = goodness_scores(w, queries, params);
  return extract(g, queries, scores, params);
}

}  // namespace hgraph
