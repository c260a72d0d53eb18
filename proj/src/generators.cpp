#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "hgraph/graph.hpp"

namespace hgraph {

Graph generate_synthetic(std::size_t n, double avg_degree, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("synthetic graph needs at least 2 nodes");
  if (!(avg_degree >= 0)) throw std::invalid_argument("average degree must be non-negative");
  const auto m = static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * avg_degree / 2));
  const std::uint64_t possible = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (m > possible) {
    throw std::invalid_argument("requested " + std::to_string(m) + " edges but only " +
                                std::to_string(possible) + " are possible");
  }
  std::mt19937_64 rng(seed);
  GraphBuilder b(n);

  if (m * 3 > possible) {
    // Dense request: partial shuffle of the full pair list.
    std::vector<std::uint64_t> pairs;
    pairs.reserve(possible);
    for (std::uint64_t u = 0; u < n; ++u)
      for (std::uint64_t v = u + 1; v < n; ++v) pairs.push_back((u << 32) | v);
    for (std::uint64_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::uint64_t> pick(i, possible - 1);
      std::swap(pairs[i], pairs[pick(rng)]);
      b.add_edge(static_cast<NodeId>(pairs[i] >> 32), static_cast<NodeId>(pairs[i] & 0xFFFFFFFFu));
    }
    return std::move(b).build();
  }

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(m) * 2);
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
  while (seen.size() < m) {
    NodeId a = node(rng);
    NodeId c = node(rng);
    if (a == c) continue;
    if (seen.insert(edge_key(a, c)).second) b.add_edge(a, c);
  }
  return std::move(b).build();
}

Graph generate_preferential_attachment(std::size_t n, std::size_t links_per_node,
                                       std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("graph needs at least 2 nodes");
  if (links_per_node == 0) throw std::invalid_argument("links_per_node must be positive");
  std::mt19937_64 rng(seed);
  GraphBuilder b(n);
  std::vector<NodeId> endpoints;  // one entry per edge endpoint
  const std::size_t core = std::min(n, links_per_node + 1);
  for (NodeId u = 0; u < core; ++u)
    for (NodeId v = u + 1; v < core; ++v) {
      b.add_edge(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  std::vector<NodeId> chosen;
  for (auto t = static_cast<NodeId>(core); t < n; ++t) {
    chosen.clear();
    while (chosen.size() < links_per_node) {
      std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
      NodeId target = endpoints[pick(rng)];
      if (std::find(chosen.begin(), chosen.end(), target) == chosen.end()) chosen.push_back(target);
    }
    for (NodeId target : chosen) {
      b.add_edge(t, target);
      endpoints.push_back(t);
      endpoints.push_back(target);
    }
  }
  return std::move(b).build();
}

}  // namespace hgraph
