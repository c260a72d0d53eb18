#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hgraph/graph.hpp"

namespace hgraph {

// Fan-out and total tree levels (root is level 1, leaves at most at `levels`).
struct HierarchySpec {
  std::uint32_t k = 2;
  std::uint32_t levels = 2;

  void validate() const;
};

// Root-to-leaf child indices; empty for a tree whose root is its only leaf.
using LeafPath = std::vector<std::uint32_t>;

// Maps every graph node to the leaf it belongs to. Paths form a prefix-free
// set: no leaf path is a proper prefix of another, so every path names a leaf.
class PartitionAssignment {
 public:
  PartitionAssignment() = default;
  PartitionAssignment(std::uint32_t k, std::vector<LeafPath> paths);

  std::uint32_t k() const { return k_; }
  std::size_t node_count() const { return paths_.size(); }
  const LeafPath& path(NodeId v) const { return paths_.at(v); }
  const std::vector<LeafPath>& paths() const { return paths_; }

  std::size_t max_depth() const;
  std::size_t leaf_count() const;

  // Throws AssignmentError naming the offending node when an index is >= k,
  // or when one node's path is a proper prefix of another node's path.
  void validate() const;

 private:
  std::uint32_t k_ = 2;
  std::vector<LeafPath> paths_;
};

// Recursive k-way split by BFS region growing: k seeds spread by hop
// distance, round-robin growth capped at ceil(n/k), then one pass moving
// boundary nodes when that lowers the cut and keeps every part within
// [0.8 floor(n/k), 1.2 ceil(n/k)]. Parts smaller than k stop early and become
// leaves. `seed` picks the first region seed; everything else breaks ties by
// lowest node id.
PartitionAssignment partition_recursive(const Graph& g, const HierarchySpec& spec,
                                        std::uint64_t seed);

// Reads `node<TAB>a/b/c` lines. With `k == 0` the fan-out is inferred as
// max index + 1 (at least 2). `node_count` must be covered exactly.
PartitionAssignment load_assignment(std::istream& in, std::size_t node_count,
                                    std::uint32_t k = 0);
PartitionAssignment load_assignment_file(const std::string& path, std::size_t node_count,
                                         std::uint32_t k = 0);

void save_assignment(const PartitionAssignment& a, std::ostream& out);
void save_assignment_file(const PartitionAssignment& a, const std::string& path);

std::string format_path(const LeafPath& path);

}  // namespace hgraph
