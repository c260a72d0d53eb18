#include "hgraph/leaf_cache.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>

namespace hgraph {

std::optional<NodeId> LeafSubgraph::local_id(NodeId global) const {
  auto it = std::lower_bound(global_ids.begin(), global_ids.end(), global);
  if (it == global_ids.end() || *it != global) return std::nullopt;
  return static_cast<NodeId>(it - global_ids.begin());
}

std::size_t default_leaf_cache_capacity() {
  if (const char* env = std::getenv("HGRAPH_LEAF_CACHE")) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), value);
    if (ec == std::errc{} && *ptr == '\0' && value > 0) return value;
  }
  return 64;
}

LeafCache::LeafCache(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

std::shared_ptr<const LeafSubgraph> LeafCache::get(const std::string& key, const Loader& load) {
  std::promise<std::shared_ptr<const LeafSubgraph>> promise;
  std::uint64_t ticket = 0;
  {
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.lru);
      ++hits_;
      Future pending = it->second.value;
      lock.unlock();
      return pending.get();
    }
    ticket = ++next_ticket_;
    lru_.push_front(key);
    entries_.emplace(key, Entry{promise.get_future().share(), lru_.begin(), ticket});
    while (entries_.size() > capacity_) {
      entries_.erase(lru_.back());
      lru_.pop_back();
    }
    ++loads_;
  }
  try {
    auto value = load();
    promise.set_value(value);
    return value;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end() && it->second.ticket == ticket) {
      lru_.erase(it->second.lru);
      entries_.erase(it);
    }
    throw;
  }
}

bool LeafCache::contains(const std::string& key) const {
  std::lock_guard lock(mutex_);
  return entries_.count(key) != 0;
}

std::size_t LeafCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void LeafCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
  lru_.clear();
}

}  // namespace hgraph
