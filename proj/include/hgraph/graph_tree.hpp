#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>
#include <vector>

#include "hgraph/graph.hpp"
#include "hgraph/leaf_cache.hpp"
#include "hgraph/partition.hpp"

namespace hgraph {

using RecordIndex = std::uint32_t;

// All original edges crossing the coverages of two sibling records.
class SuperEdgeRecord {
 public:
  SuperEdgeRecord() = default;
  SuperEdgeRecord(RecordIndex a, RecordIndex b, std::vector<EdgeRef> edges);

  RecordIndex a() const { return a_; }
  RecordIndex b() const { return b_; }
  // Sorted by (u, v).
  const std::vector<EdgeRef>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }
  Weight weight() const { return weight_; }

 private:
  RecordIndex a_ = 0;
  RecordIndex b_ = 0;
  std::vector<EdgeRef> edges_;
  Weight weight_ = 0;
};

// One node of the hierarchy. Internal records hold the SuperEdges among
// their children; leaf records point at an on-disk subgraph.
struct TreeRecord {
  std::string id;
  std::uint32_t level = 1;
  std::optional<RecordIndex> parent;
  std::uint32_t child_position = 0;  // index within parent's `children`
  std::uint32_t path_component = 0;  // child index in the assignment path
  std::vector<RecordIndex> children;
  std::vector<NodeId> open_nodes;  // sorted
  std::size_t coverage_size = 0;

  // Internal records only.
  std::vector<SuperEdgeRecord> super_edges;

  // Leaf records only.
  bool leaf = false;
  std::string leaf_file;  // relative to the storage directory, no extension
  std::vector<NodeId> members;  // sorted
  std::size_t internal_edges = 0;
  std::uint64_t leaf_checksum = 0;

  bool is_open(NodeId v) const { return open_lookup.count(v) != 0; }
  // SuperEdge between children at positions i and j, if any edge crosses them.
  const SuperEdgeRecord* super_edge(std::uint32_t i, std::uint32_t j) const;
  // SuperEdges incident to the child at `position`.
  std::span<const std::uint32_t> incident(std::uint32_t position) const;

  // Derived lookups, rebuilt after load.
  absl::flat_hash_set<NodeId> open_lookup;
  absl::flat_hash_map<std::uint64_t, std::uint32_t> pair_slot;
  std::vector<std::vector<std::uint32_t>> incident_slots;
  std::vector<EdgeRef> endpoint_edges;  // every SuperEdge edge once per endpoint, grouped by endpoint

  void index();
};

struct TreeStats {
  std::size_t tn = 0;   // records
  std::size_t sn = 0;   // internal records
  std::size_t lsn = 0;  // leaves
  std::uint32_t h = 0;  // height in levels, root is level 1
  std::uint32_t k = 0;
  double p = 0;  // |V| / lsn
  double d = 0;  // |E| / |V|
  double r = 0;  // external edges / |E|
  std::size_t resident_edges = 0;  // sum of SuperEdge sizes
  std::size_t open_node_entries = 0;
  // Index l-1 describes SuperEdges held by records at level l.
  std::vector<double> f_per_level;           // analytical model
  std::vector<double> measured_f_per_level;  // stored edges / child pairs
};

// ceil(log_k(tn (k-1) + 1)), evaluated exactly in integers.
std::uint32_t complete_tree_height(std::size_t tn, std::uint32_t k);
// k (k-1) / 2.
std::size_t superedges_per_record(std::uint32_t k);
// f(1) = |E| r / se(k); f(l) = f(l-1) r / se(k).
std::vector<double> expected_superedge_sizes(std::size_t edges, double r, std::uint32_t k,
                                             std::uint32_t levels);

struct LabelHit {
  NodeId node;
  std::string leaf_id;
};

// Hierarchy of partitions over a graph. The records, open-node sets,
// SuperEdges and label index live in memory; leaf-internal edges live in
// per-leaf files and are read on demand through a bounded cache.
// Immutable once built; every query is safe to call concurrently.
class GraphTree {
 public:
  static constexpr int kManifestVersion = 1;
  static constexpr const char* kManifestName = "manifest.json";

  // Fills the hierarchy bottom-up: leaves write their internal edges under
  // `storage_dir/leaves`, internal records match the external edges their
  // children propagate, record open nodes and pass unmatched edges upward.
  static GraphTree build(const Graph& g, const PartitionAssignment& a,
                         const std::filesystem::path& storage_dir,
                         std::size_t cache_capacity = default_leaf_cache_capacity());

  // Reads `dir/manifest.json`; leaf files are not touched until requested.
  static GraphTree open(const std::filesystem::path& dir,
                        std::size_t cache_capacity = default_leaf_cache_capacity());
  // Writes `dir/manifest.json` with leaf paths relative to `dir`.
  void save(const std::filesystem::path& dir) const;
  // The manifest document as saved.
  std::string manifest_text(const std::filesystem::path& dir) const;

  GraphTree(GraphTree&&) noexcept = default;
  GraphTree& operator=(GraphTree&&) noexcept = default;
  ~GraphTree();

  std::size_t node_count() const { return node_count_; }
  std::size_t edge_count() const { return edge_count_; }
  std::uint32_t k() const { return k_; }
  std::uint64_t graph_checksum() const { return graph_checksum_; }
  const TreeStats& stats() const { return stats_; }
  const std::filesystem::path& storage_dir() const { return storage_dir_; }

  RecordIndex root_index() const { return 0; }
  std::span<const TreeRecord> records() const { return records_; }
  const TreeRecord& record(RecordIndex i) const { return records_.at(i); }
  const TreeRecord& record(std::string_view id) const { return records_[index_of(id)]; }
  std::optional<RecordIndex> find(std::string_view id) const;
  // Throws NotFound.
  RecordIndex index_of(std::string_view id) const;

  RecordIndex leaf_of(NodeId v) const;
  std::optional<std::string> label(NodeId v) const;

  std::vector<NodeId> coverage(std::string_view id) const;
  std::vector<NodeId> coverage(RecordIndex i) const;
  std::optional<std::string> parent(std::string_view id) const;
  // Parent first, root last; empty for the root.
  std::vector<std::string> ancestors(std::string_view id) const;
  bool is_ancestor(RecordIndex ancestor, RecordIndex descendant) const;

  // Edges with one endpoint in each coverage. Siblings return their
  // SuperEdge; other pairs filter the first common parent's SuperEdge by the
  // two open-node sets. Throws NestedSuperNodes for equal or nested ids.
  std::vector<EdgeRef> snc(std::string_view a, std::string_view b) const;
  std::vector<EdgeRef> snc(RecordIndex a, RecordIndex b) const;

  // Edges from v to nodes outside v's leaf, found by climbing while v stays
  // an open node.
  std::vector<EdgeRef> gnc(NodeId v) const;

  std::shared_ptr<const LeafSubgraph> load_leaf(std::string_view id) const;
  LeafCache& leaf_cache() const { return *cache_; }

  // Lowest-id node carrying `label`, if any.
  std::optional<LabelHit> label_search(std::string_view label) const;
  // Every node carrying `label`, ascending.
  std::vector<NodeId> label_candidates(std::string_view label) const;

 private:
  GraphTree();
  void finalize();
  void index_gnc();
  std::shared_ptr<const LeafSubgraph> read_leaf(RecordIndex i) const;

  std::size_t node_count_ = 0;
  std::size_t edge_count_ = 0;
  std::uint32_t k_ = 2;
  std::uint32_t levels_ = 0;
  std::uint64_t graph_checksum_ = 0;
  std::filesystem::path storage_dir_;
  std::vector<TreeRecord> records_;
  std::unordered_map<std::string, RecordIndex> id_index_;
  std::vector<RecordIndex> node_leaf_;
  // GNC index: for node v, slots gnc_start_[v] .. gnc_start_[v + 1] give its
  // run of endpoint_edges in each ancestor it is open below, nearest first.
  struct GncRun {
    RecordIndex record = 0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
  };
  std::vector<std::uint32_t> gnc_start_;
  std::vector<GncRun> gnc_runs_;
  std::map<NodeId, std::string> labels_;
  std::unordered_map<std::string, std::vector<NodeId>> label_index_;
  TreeStats stats_;
  std::unique_ptr<LeafCache> cache_;
};

// Record id for a child: "s0" for the root, one digit per level when k <= 10,
// otherwise `/`-separated components ("s0/12/3").
std::string child_record_id(const std::string& parent_id, std::uint32_t component, std::uint32_t k);

// A node given either as a decimal id or as a label. Throws NotFound, or
// AmbiguousLabel when several nodes carry the label.
NodeId resolve_node(const GraphTree& t, std::string_view ref);

// TSV edge list, one `u<TAB>v<TAB>w` line per edge. Shared by the CLI and the
// service so both emit identical bytes.
std::string format_edges_tsv(std::span<const EdgeRef> edges);

}  // namespace hgraph
