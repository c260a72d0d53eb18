#pragma once

#include <cstddef>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hgraph {

using NodeId = std::uint32_t;
using Weight = double;

// Canonical undirected edge: u < v.
struct EdgeRef {
  NodeId u = 0;
  NodeId v = 0;
  Weight w = 1.0;

  friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
  friend std::partial_ordering operator<=>(const EdgeRef& a, const EdgeRef& b) {
    if (a.u != b.u) return a.u <=> b.u;
    if (a.v != b.v) return a.v <=> b.v;
    return a.w <=> b.w;
  }
};

// Builds the canonical (min, max) form; throws on self-loops.
EdgeRef make_edge(NodeId a, NodeId b, Weight w = 1.0);

// 64-bit key identifying an edge by its endpoints only.
inline std::uint64_t edge_key(NodeId u, NodeId v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

struct Neighbor {
  NodeId node;
  Weight w;
};

// Immutable weighted undirected simple graph with dense node ids and CSR
// adjacency. Build through GraphBuilder or the loaders below.
class Graph {
 public:
  Graph() = default;

  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const { return edges_.size(); }

  // Sorted by (u, v).
  const std::vector<EdgeRef>& edges() const { return edges_; }

  std::span<const Neighbor> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const;
  Weight weighted_degree(NodeId v) const;

  // Weight of edge (a, b) if present.
  std::optional<Weight> edge_weight(NodeId a, NodeId b) const;

  const std::map<NodeId, std::string>& labels() const { return labels_; }
  std::optional<std::string> label(NodeId v) const;

 private:
  friend class GraphBuilder;

  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;  // each row sorted by neighbor id
  std::vector<EdgeRef> edges_;
  std::map<NodeId, std::string> labels_;
};

// Accumulates edges, then freezes them into a Graph. Duplicate edges are
// merged by summing their weights; self-loops are dropped and counted.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::size_t node_count = 0) : node_count_(node_count) {}

  // Grows the node range if needed.
  void reserve_nodes(std::size_t n);
  void add_edge(NodeId a, NodeId b, Weight w = 1.0);
  void set_label(NodeId v, std::string label);

  std::size_t dropped_self_loops() const { return self_loops_; }
  std::size_t merged_duplicates() const { return merged_; }

  Graph build() &&;

 private:
  std::size_t node_count_;
  std::vector<EdgeRef> pending_;
  std::map<NodeId, std::string> labels_;
  std::size_t self_loops_ = 0;
  std::size_t merged_ = 0;
};

struct LoadedGraph {
  Graph graph;
  std::size_t dropped_self_loops = 0;
  std::size_t merged_duplicates = 0;
};

// Reads `u v [w]` lines (tab or space separated), `#L<TAB>id<TAB>label`
// label lines and an optional `#N<TAB>count` node-count header. Other lines
// starting with '#' or '%' are comments.
LoadedGraph load_edge_list(std::istream& in);
LoadedGraph load_edge_list_file(const std::string& path);

// Writes the format read by load_edge_list: `#N` header, label lines, then
// edges sorted by (u, v). Weights use the shortest round-trip representation.
void save_edge_list(const Graph& g, std::ostream& out);
void save_edge_list_file(const Graph& g, const std::string& path);

// One raw record of the edge-list text format, before node ids are
// interpreted. Shared by the graph loader and the leaf-file reader.
struct EdgeListRecords {
  std::optional<std::size_t> declared_nodes;
  std::vector<EdgeRef> edges;  // as written; not canonicalized
  std::vector<std::pair<NodeId, std::string>> labels;
  std::size_t max_id_plus_one = 0;
};
EdgeListRecords parse_edge_list(std::istream& in);

// Formats a weight the way save_edge_list does.
std::string format_weight(Weight w);

// Uniform random simple graph G(n, m) with m = round(n * avg_degree / 2).
Graph generate_synthetic(std::size_t n, double avg_degree, std::uint64_t seed);

// Preferential-attachment graph: each new node links to `links_per_node`
// distinct existing nodes chosen proportionally to degree.
Graph generate_preferential_attachment(std::size_t n, std::size_t links_per_node,
                                       std::uint64_t seed);

// FNV-1a over node count and the sorted canonical edge list.
std::uint64_t graph_checksum(const Graph& g);

}  // namespace hgraph
