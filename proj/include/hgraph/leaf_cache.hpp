#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgraph/graph.hpp"

namespace hgraph {

// A leaf's internal-edge subgraph, renumbered to local ids 0..members-1.
struct LeafSubgraph {
  std::string leaf_id;
  Graph graph;
  std::vector<NodeId> global_ids;  // local -> global, ascending

  std::optional<NodeId> local_id(NodeId global) const;
  NodeId global_id(NodeId local) const { return global_ids.at(local); }
};

// Capacity from HGRAPH_LEAF_CACHE if set to a positive integer, else 64.
std::size_t default_leaf_cache_capacity();

// Bounded LRU of loaded leaves. Concurrent requests for a leaf that is not
// cached share a single load.
class LeafCache {
 public:
  using Loader = std::function<std::shared_ptr<const LeafSubgraph>()>;

  explicit LeafCache(std::size_t capacity = default_leaf_cache_capacity());

  // Returns the cached leaf or runs `load` exactly once for this key while
  // other callers for the same key wait on its result. Loader exceptions
  // propagate to every waiter and leave no entry behind.
  std::shared_ptr<const LeafSubgraph> get(const std::string& key, const Loader& load);

  // True when `key` is resident (or being loaded).
  bool contains(const std::string& key) const;

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const;
  std::size_t loads() const { return loads_.load(); }
  std::size_t hits() const { return hits_.load(); }
  void clear();

 private:
  using Future = std::shared_future<std::shared_ptr<const LeafSubgraph>>;
  struct Entry {
    Future value;
    std::list<std::string>::iterator lru;
    std::uint64_t ticket;
  };

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<std::string> lru_;  // front = most recent
  std::unordered_map<std::string, Entry> entries_;
  std::uint64_t next_ticket_ = 0;
  std::atomic<std::size_t> loads_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace hgraph
