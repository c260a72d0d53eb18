#include "hgraph/graph_tree.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <map>
#include <stdexcept>

#include "hgraph/errors.hpp"

namespace hgraph {

namespace {

std::uint64_t pair_key(std::uint32_t i, std::uint32_t j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

}  // namespace

SuperEdgeRecord::SuperEdgeRecord(RecordIndex a, RecordIndex b, std::vector<EdgeRef> edges)
    : a_(a), b_(b), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end());
  for (const auto& e : edges_) weight_ += e.w;
}

const SuperEdgeRecord* TreeRecord::super_edge(std::uint32_t i, std::uint32_t j) const {
  auto it = pair_slot.find(pair_key(i, j));
  return it == pair_slot.end() ? nullptr : &super_edges[it->second];
}

std::span<const std::uint32_t> TreeRecord::incident(std::uint32_t position) const {
  if (position >= incident_slots.size()) return {};
  return incident_slots[position];
}

void TreeRecord::index() {
  open_lookup = absl::flat_hash_set<NodeId>(open_nodes.begin(), open_nodes.end());
  pair_slot.clear();
  incident_slots.assign(children.size(), {});
}

std::uint32_t complete_tree_height(std::size_t tn, std::uint32_t k) {
  if (k < 2) throw std::invalid_argument("k must be at least 2");
  if (tn == 0) return 0;
  // Smallest h with k^h >= tn (k - 1) + 1, i.e. 1 + k + ... + k^(h-1) >= tn.
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t sum = 0;
  std::uint64_t power = 1;
  std::uint32_t h = 0;
  while (sum < tn) {
    sum = power > kMax - sum ? kMax : sum + power;
    power = power > kMax / k ? kMax : power * k;
    ++h;
  }
  return h;
}

std::size_t superedges_per_record(std::uint32_t k) {
  return static_cast<std::size_t>(k) * (k - 1) / 2;
}

std::vector<double> expected_superedge_sizes(std::size_t edges, double r, std::uint32_t k,
                                             std::uint32_t levels) {
  std::vector<double> f;
  if (levels < 2) return f;
  const double se = static_cast<double>(superedges_per_record(k));
  double current = static_cast<double>(edges) * r / se;
  for (std::uint32_t l = 1; l < levels; ++l) {
    f.push_back(current);
    current = current * r / se;
  }
  return f;
}

std::string child_record_id(const std::string& parent_id, std::uint32_t component, std::uint32_t k) {
  if (k <= 10) return parent_id + static_cast<char>('0' + component);
  return parent_id + "/" + std::to_string(component);
}

std::string format_edges_tsv(std::span<const EdgeRef> edges) {
  std::string out;
  out.reserve(edges.size() * 16);
  for (const auto& e : edges) {
    out += std::to_string(e.u);
    out += '\t';
    out += std::to_string(e.v);
    out += '\t';
    out += format_weight(e.w);
    out += '\n';
  }
  return out;
}

AmbiguousLabel::AmbiguousLabel(const std::string& label, std::vector<std::uint32_t> candidates)
    : Error([&] {
        std::string msg = "label '" + label + "' is ambiguous; candidates:";
        for (auto c : candidates) msg += " " + std::to_string(c);
        return msg;
      }()),
      candidates_(std::move(candidates)) {}

NodeId resolve_node(const GraphTree& t, std::string_view ref) {
  const bool numeric = !ref.empty() && std::all_of(ref.begin(), ref.end(), [](char ch) {
    return ch >= '0' && ch <= '9';
  });
  if (numeric) {
    NodeId v = 0;
    auto [p, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), v);
    if (ec != std::errc() || v >= t.node_count()) {
      throw NotFound("node " + std::string(ref) + " out of range");
    }
    return v;
  }
  auto candidates = t.label_candidates(ref);
  if (candidates.empty()) throw NotFound("no node labeled '" + std::string(ref) + "'");
  if (candidates.size() > 1) throw AmbiguousLabel(std::string(ref), std::move(candidates));
  return candidates.front();
}

GraphTree::GraphTree() : cache_(std::make_unique<LeafCache>()) {}
GraphTree::~GraphTree() = default;

std::optional<RecordIndex> GraphTree::find(std::string_view id) const {
  auto it = id_index_.find(std::string(id));
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

RecordIndex GraphTree::index_of(std::string_view id) const {
  auto i = find(id);
  if (!i) throw NotFound("unknown supernode '" + std::string(id) + "'");
  return *i;
}

RecordIndex GraphTree::leaf_of(NodeId v) const {
  if (v >= node_leaf_.size()) throw NotFound("node " + std::to_string(v) + " out of range");
  return node_leaf_[v];
}

std::optional<std::string> GraphTree::label(NodeId v) const {
  auto it = labels_.find(v);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> GraphTree::coverage(std::string_view id) const { return coverage(index_of(id)); }

std::vector<NodeId> GraphTree::coverage(RecordIndex i) const {
  std::vector<NodeId> out;
  out.reserve(records_.at(i).coverage_size);
  std::vector<RecordIndex> stack{i};
  while (!stack.empty()) {
    const auto& r = records_[stack.back()];
    stack.pop_back();
    if (r.leaf) out.insert(out.end(), r.members.begin(), r.members.end());
    for (auto c : r.children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::string> GraphTree::parent(std::string_view id) const {
  const auto& r = record(id);
  if (!r.parent) return std::nullopt;
  return records_[*r.parent].id;
}

std::vector<std::string> GraphTree::ancestors(std::string_view id) const {
  std::vector<std::string> out;
  auto cur = record(id).parent;
  while (cur) {
    out.push_back(records_[*cur].id);
    cur = records_[*cur].parent;
  }
  return out;
}

bool GraphTree::is_ancestor(RecordIndex ancestor, RecordIndex descendant) const {
  if (records_.at(ancestor).level >= records_.at(descendant).level) return false;
  auto cur = records_[descendant].parent;
  while (cur && records_[*cur].level >= records_[ancestor].level) {
    if (*cur == ancestor) return true;
    cur = records_[*cur].parent;
  }
  return false;
}

std::vector<EdgeRef> GraphTree::snc(std::string_view a, std::string_view b) const {
  return snc(index_of(a), index_of(b));
}

std::vector<EdgeRef> GraphTree::snc(RecordIndex a, RecordIndex b) const {
  if (a >= records_.size() || b >= records_.size()) throw NotFound("supernode index out of range");
  if (a == b) throw NestedSuperNodes("SNC of '" + records_[a].id + "' with itself");
  if (is_ancestor(a, b) || is_ancestor(b, a)) {
    throw NestedSuperNodes("'" + records_[a].id + "' and '" + records_[b].id +
                           "' are nested supernodes; their coverages overlap");
  }
  // Climb to the two children of the first common parent.
  RecordIndex g = a;
  RecordIndex h = b;
  while (records_[g].level > records_[h].level) g = *records_[g].parent;
  while (records_[h].level > records_[g].level) h = *records_[h].parent;
  while (records_[g].parent != records_[h].parent) {
    g = *records_[g].parent;
    h = *records_[h].parent;
  }
  const auto& common = records_[*records_[g].parent];
  const auto* se = common.super_edge(records_[g].child_position, records_[h].child_position);
  if (!se) return {};
  if (g == a && h == b) return se->edges();

  const auto& ra = records_[a];
  const auto& rb = records_[b];
  std::vector<EdgeRef> out;
  for (const auto& e : se->edges()) {
    if ((ra.is_open(e.u) && rb.is_open(e.v)) || (ra.is_open(e.v) && rb.is_open(e.u))) out.push_back(e);
  }
  return out;
}

std::vector<EdgeRef> GraphTree::gnc(NodeId v) const {
  std::vector<EdgeRef> out;
  leaf_of(v);
  for (auto i = gnc_start_[v]; i < gnc_start_[v + 1]; ++i) {
    const auto& run = gnc_runs_[i];
    const auto& edges = records_[run.record].endpoint_edges;
    out.insert(out.end(), edges.begin() + run.begin, edges.begin() + run.end);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::shared_ptr<const LeafSubgraph> GraphTree::load_leaf(std::string_view id) const {
  RecordIndex i = index_of(id);
  if (!records_[i].leaf) throw NotFound("'" + std::string(id) + "' is not a leaf");
  return cache_->get(records_[i].id, [this, i] { return read_leaf(i); });
}

std::optional<LabelHit> GraphTree::label_search(std::string_view label) const {
  auto it = label_index_.find(std::string(label));
  if (it == label_index_.end() || it->second.empty()) return std::nullopt;
  NodeId v = it->second.front();
  return LabelHit{v, records_[node_leaf_[v]].id};
}

std::vector<NodeId> GraphTree::label_candidates(std::string_view label) const {
  auto it = label_index_.find(std::string(label));
  if (it == label_index_.end()) return {};
  return it->second;
}

void GraphTree::index_gnc() {
  const auto n = node_leaf_.size();
  gnc_start_.assign(n + 1, 0);
  for (NodeId v = 0; v < n; ++v) {
    std::uint32_t depth = 0;
    for (RecordIndex cur = node_leaf_[v]; records_[cur].parent && records_[cur].is_open(v);
         cur = *records_[cur].parent) {
      ++depth;
    }
    gnc_start_[v + 1] = gnc_start_[v] + depth;
  }
  gnc_runs_.assign(gnc_start_[n], {});
  std::vector<std::pair<NodeId, EdgeRef>> ends;
  for (RecordIndex r = 0; r < records_.size(); ++r) {
    auto& rec = records_[r];
    ends.clear();
    for (const auto& se : rec.super_edges) {
      for (const auto& e : se.edges()) {
        ends.emplace_back(e.u, e);
        ends.emplace_back(e.v, e);
      }
    }
    std::sort(ends.begin(), ends.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first < y.first : x.second < y.second;
    });
    rec.endpoint_edges.clear();
    rec.endpoint_edges.reserve(ends.size());
    for (std::uint32_t i = 0; i < ends.size();) {
      const NodeId v = ends[i].first;
      std::uint32_t j = i;
      while (j < ends.size() && ends[j].first == v) rec.endpoint_edges.push_back(ends[j++].second);
      // v has an edge here, so it is open in every record between its leaf and r.
      const auto up = records_[node_leaf_[v]].level - rec.level - 1;
      if (gnc_start_[v] + up >= gnc_start_[v + 1]) throw std::logic_error("open nodes are not monotone");
      gnc_runs_[gnc_start_[v] + up] = GncRun{r, i, j};
      i = j;
    }
  }
}

void GraphTree::finalize() {
  id_index_.clear();
  for (RecordIndex i = 0; i < records_.size(); ++i) {
    auto& r = records_[i];
    id_index_.emplace(r.id, i);
    r.index();
    for (std::uint32_t s = 0; s < r.super_edges.size(); ++s) {
      const auto& se = r.super_edges[s];
      auto pa = records_[se.a()].child_position;
      auto pb = records_[se.b()].child_position;
      r.pair_slot.emplace(pair_key(pa, pb), s);
      r.incident_slots[pa].push_back(s);
      r.incident_slots[pb].push_back(s);
    }
  }
  index_gnc();
  for (auto& r : records_) r.coverage_size = 0;
  // Parents come before children in record order.
  for (auto i = records_.size(); i-- > 0;) {
    auto& r = records_[i];
    if (r.leaf) r.coverage_size = r.members.size();
    if (r.parent) records_[*r.parent].coverage_size += r.coverage_size;
  }
  label_index_.clear();
  for (const auto& [id, text] : labels_) label_index_[text].push_back(id);

  TreeStats s;
  s.k = k_;
  s.tn = records_.size();
  for (const auto& r : records_) {
    (r.leaf ? s.lsn : s.sn) += 1;
    s.h = std::max(s.h, r.level);
    s.open_node_entries += r.open_nodes.size();
    for (const auto& se : r.super_edges) s.resident_edges += se.size();
  }
  s.p = s.lsn ? static_cast<double>(node_count_) / static_cast<double>(s.lsn) : 0.0;
  s.d = node_count_ ? static_cast<double>(edge_count_) / static_cast<double>(node_count_) : 0.0;
  s.r = edge_count_ ? static_cast<double>(s.resident_edges) / static_cast<double>(edge_count_) : 0.0;
  s.f_per_level = expected_superedge_sizes(edge_count_, s.r, k_, s.h);
  std::vector<double> stored(s.h, 0.0), pairs(s.h, 0.0);
  for (const auto& r : records_) {
    if (r.leaf) continue;
    const double c = static_cast<double>(r.children.size());
    pairs[r.level - 1] += c * (c - 1) / 2;
    for (const auto& se : r.super_edges) stored[r.level - 1] += static_cast<double>(se.size());
  }
  for (std::uint32_t l = 0; l + 1 < s.h; ++l) {
    s.measured_f_per_level.push_back(pairs[l] > 0 ? stored[l] / pairs[l] : 0.0);
  }
  stats_ = std::move(s);
}

}  // namespace hgraph
