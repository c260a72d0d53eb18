#include "hgraph/partition.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include "hgraph/errors.hpp"

namespace hgraph {

void HierarchySpec::validate() const {
  if (k < 2) throw std::invalid_argument("k must be at least 2");
  if (levels < 2) throw std::invalid_argument("levels must be at least 2");
}

PartitionAssignment::PartitionAssignment(std::uint32_t k, std::vector<LeafPath> paths)
    : k_(k), paths_(std::move(paths)) {}

std::size_t PartitionAssignment::max_depth() const {
  std::size_t d = 0;
  for (const auto& p : paths_) d = std::max(d, p.size());
  return d;
}

std::size_t PartitionAssignment::leaf_count() const {
  std::set<LeafPath> leaves(paths_.begin(), paths_.end());
  return leaves.size();
}

void PartitionAssignment::validate() const {
  if (k_ < 2) throw AssignmentError("fan-out k must be at least 2");
  for (std::size_t v = 0; v < paths_.size(); ++v) {
    for (auto idx : paths_[v]) {
      if (idx >= k_) {
        throw AssignmentError("node " + std::to_string(v) + ": path index " +
                              std::to_string(idx) + " is not below k=" + std::to_string(k_));
      }
    }
  }
  // Sorted order puts every prefix directly before some path extending it.
  std::vector<std::pair<const LeafPath*, std::size_t>> order;
  order.reserve(paths_.size());
  for (std::size_t v = 0; v < paths_.size(); ++v) order.emplace_back(&paths_[v], v);
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return *a.first < *b.first; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& prev = *order[i - 1].first;
    const auto& cur = *order[i].first;
    if (prev.size() < cur.size() && std::equal(prev.begin(), prev.end(), cur.begin())) {
      throw AssignmentError("node " + std::to_string(order[i - 1].second) + ": path '" +
                            format_path(prev) + "' is a prefix of node " +
                            std::to_string(order[i].second) + "'s path '" + format_path(cur) +
                            "' (inconsistent path lengths)");
    }
  }
}

std::string format_path(const LeafPath& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '/';
    out += std::to_string(path[i]);
  }
  return out;
}

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

class KWaySplitter {
 public:
  KWaySplitter(const Graph& g, std::uint32_t k, std::uint64_t seed)
      : g_(g), k_(k), rng_(seed), part_(g.node_count(), kNone), dist_(g.node_count(), kNone) {}

  // Splits `nodes` (sorted) into k parts; returns the part of each entry.
  std::vector<std::vector<NodeId>> split(const std::vector<NodeId>& nodes) {
    const std::size_t n = nodes.size();
    for (NodeId v : nodes) part_[v] = kUnassigned;
    auto seeds = pick_seeds(nodes);
    grow(nodes, seeds);
    refine(nodes);
    std::vector<std::vector<NodeId>> parts(k_);
    for (auto& p : parts) p.reserve(n / k_ + 1);
    for (NodeId v : nodes) parts[part_[v]].push_back(v);
    for (NodeId v : nodes) part_[v] = kNone;
    return parts;
  }

 private:
  static constexpr std::uint32_t kUnassigned = kNone - 1;

  bool in_set(NodeId v) const { return part_[v] != kNone; }

  // Multi-source BFS hop distances from `sources` inside the current set.
  void bfs(const std::vector<NodeId>& nodes, const std::vector<NodeId>& sources) {
    for (NodeId v : nodes) dist_[v] = kNone;
    std::deque<NodeId> queue;
    for (NodeId s : sources) {
      dist_[s] = 0;
      queue.push_back(s);
    }
    while (!queue.empty()) {
      NodeId x = queue.front();
      queue.pop_front();
      for (const auto& nb : g_.neighbors(x)) {
        if (in_set(nb.node) && dist_[nb.node] == kNone) {
          dist_[nb.node] = dist_[x] + 1;
          queue.push_back(nb.node);
        }
      }
    }
  }

  std::vector<NodeId> pick_seeds(const std::vector<NodeId>& nodes) {
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    std::vector<NodeId> seeds{nodes[pick(rng_)]};
    while (seeds.size() < k_) {
      bfs(nodes, seeds);
      // Farthest node; unreachable counts as infinitely far. `nodes` is
      // sorted, so the first maximum is the lowest id.
      NodeId best = kNone;
      std::uint64_t best_d = 0;
      for (NodeId v : nodes) {
        std::uint64_t d = dist_[v] == kNone ? std::numeric_limits<std::uint64_t>::max() : dist_[v];
        if (d > best_d) {
          best_d = d;
          best = v;
        }
      }
      if (best == kNone) {
        // Every node is already a seed; cannot happen for n >= k.
        throw std::logic_error("seed selection exhausted the part");
      }
      seeds.push_back(best);
    }
    return seeds;
  }

  void grow(const std::vector<NodeId>& nodes, const std::vector<NodeId>& seeds) {
    const std::size_t n = nodes.size();
    const std::size_t cap = (n + k_ - 1) / k_;
    struct Region {
      std::vector<NodeId> queue;
      std::size_t head = 0;
      std::size_t scan = 0;  // neighbor position within queue[head]
    };
    std::vector<Region> regions(k_);
    sizes_.assign(k_, 0);
    for (std::uint32_t r = 0; r < k_; ++r) {
      part_[seeds[r]] = r;
      regions[r].queue.push_back(seeds[r]);
      sizes_[r] = 1;
    }
    std::size_t assigned = k_;
    std::size_t fallback = 0;  // position in `nodes` for disconnected jumps
    auto claim = [&](std::uint32_t r) {
      auto& reg = regions[r];
      while (reg.head < reg.queue.size()) {
        auto nbrs = g_.neighbors(reg.queue[reg.head]);
        while (reg.scan < nbrs.size()) {
          NodeId cand = nbrs[reg.scan++].node;
          if (in_set(cand) && part_[cand] == kUnassigned) {
            part_[cand] = r;
            reg.queue.push_back(cand);
            return;
          }
        }
        ++reg.head;
        reg.scan = 0;
      }
      while (part_[nodes[fallback]] != kUnassigned) ++fallback;
      part_[nodes[fallback]] = r;
      reg.queue.push_back(nodes[fallback]);
    };
    while (assigned < n) {
      for (std::uint32_t r = 0; r < k_ && assigned < n; ++r) {
        if (sizes_[r] >= cap) continue;
        claim(r);
        ++sizes_[r];
        ++assigned;
      }
    }
  }

  void refine(const std::vector<NodeId>& nodes) {
    const std::size_t n = nodes.size();
    const std::size_t lo = std::max<std::size_t>(1, (8 * (n / k_) + 9) / 10);
    const std::size_t hi = 12 * ((n + k_ - 1) / k_) / 10;
    std::vector<std::uint32_t> links(k_, 0);
    std::vector<std::uint32_t> touched;
    for (NodeId v : nodes) {
      const std::uint32_t from = part_[v];
      touched.clear();
      for (const auto& nb : g_.neighbors(v)) {
        if (!in_set(nb.node)) continue;
        std::uint32_t p = part_[nb.node];
        if (links[p]++ == 0) touched.push_back(p);
      }
      std::uint32_t best = from;
      std::uint32_t best_links = links[from];
      std::sort(touched.begin(), touched.end());
      for (auto p : touched) {
        if (p != from && links[p] > best_links) {
          best = p;
          best_links = links[p];
        }
      }
      if (best != from && sizes_[from] - 1 >= lo && sizes_[best] + 1 <= hi) {
        part_[v] = best;
        --sizes_[from];
        ++sizes_[best];
      }
      for (auto p : touched) links[p] = 0;
      links[from] = 0;
    }
  }

  const Graph& g_;
  std::uint32_t k_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> part_;
  std::vector<std::uint32_t> dist_;
  std::vector<std::size_t> sizes_;
};

}  // namespace

PartitionAssignment partition_recursive(const Graph& g, const HierarchySpec& spec,
                                        std::uint64_t seed) {
  spec.validate();
  if (g.node_count() == 0) throw std::invalid_argument("cannot partition an empty graph");
  std::vector<LeafPath> paths(g.node_count());
  KWaySplitter splitter(g, spec.k, seed);

  std::vector<NodeId> all(g.node_count());
  for (NodeId v = 0; v < all.size(); ++v) all[v] = v;

  struct Task {
    std::vector<NodeId> nodes;
    std::uint32_t depth;
  };
  // Depth-first with children pushed in reverse, so parts are visited in
  // index order and the result matches a plain recursive implementation.
  std::vector<Task> stack;
  stack.push_back({std::move(all), 0});
  while (!stack.empty()) {
    Task t = std::move(stack.back());
    stack.pop_back();
    if (t.depth + 1 >= spec.levels || t.nodes.size() < spec.k) continue;
    auto parts = splitter.split(t.nodes);
    for (std::uint32_t i = 0; i < spec.k; ++i)
      for (NodeId v : parts[i]) paths[v].push_back(i);
    for (std::uint32_t i = spec.k; i-- > 0;) stack.push_back({std::move(parts[i]), t.depth + 1});
  }
  return PartitionAssignment(spec.k, std::move(paths));
}

PartitionAssignment load_assignment(std::istream& in, std::size_t node_count, std::uint32_t k) {
  std::vector<std::optional<LeafPath>> seen(node_count);
  std::string line;
  std::size_t lineno = 0;
  std::uint32_t max_index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find_first_of("\t ");
    std::string_view id_text = std::string_view(line).substr(0, tab);
    std::uint64_t id = 0;
    auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc{} || ptr != id_text.data() + id_text.size()) {
      throw ParseError("invalid node id '" + std::string(id_text) + "'", lineno);
    }
    if (id >= node_count) {
      throw AssignmentError("node " + std::to_string(id) + " is not in the graph (" +
                            std::to_string(node_count) + " nodes)");
    }
    LeafPath path;
    if (tab != std::string::npos) {
      std::string_view rest = std::string_view(line).substr(tab + 1);
      while (!rest.empty() && (rest.front() == '\t' || rest.front() == ' ')) rest.remove_prefix(1);
      while (!rest.empty() && (rest.back() == '\t' || rest.back() == ' ')) rest.remove_suffix(1);
      while (!rest.empty()) {
        auto slash = rest.find('/');
        auto part = rest.substr(0, slash);
        std::uint32_t idx = 0;
        auto [p2, ec2] = std::from_chars(part.data(), part.data() + part.size(), idx);
        if (ec2 != std::errc{} || p2 != part.data() + part.size()) {
          throw ParseError("node " + std::to_string(id) + ": invalid path component '" +
                           std::string(part) + "'",
                           lineno);
        }
        path.push_back(idx);
        max_index = std::max(max_index, idx);
        if (slash == std::string_view::npos) break;
        rest.remove_prefix(slash + 1);
      }
    }
    if (seen[id]) throw AssignmentError("node " + std::to_string(id) + " assigned twice");
    seen[id] = std::move(path);
  }
  std::vector<LeafPath> paths(node_count);
  for (std::size_t v = 0; v < node_count; ++v) {
    if (!seen[v]) throw AssignmentError("node " + std::to_string(v) + " missing from assignment");
    paths[v] = std::move(*seen[v]);
  }
  if (k == 0) k = std::max<std::uint32_t>(2, max_index + 1);
  PartitionAssignment a(k, std::move(paths));
  a.validate();
  return a;
}

PartitionAssignment load_assignment_file(const std::string& path, std::size_t node_count,
                                         std::uint32_t k) {
  std::ifstream in(path);
  if (!in) throw StorageError("cannot open " + path);
  return load_assignment(in, node_count, k);
}

void save_assignment(const PartitionAssignment& a, std::ostream& out) {
  for (std::size_t v = 0; v < a.node_count(); ++v) out << v << '\t' << format_path(a.path(static_cast<NodeId>(v))) << '\n';
}

void save_assignment_file(const PartitionAssignment& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write " + path);
  save_assignment(a, out);
}

}  // namespace hgraph
