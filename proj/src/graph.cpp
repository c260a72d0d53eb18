#include "hgraph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "hgraph/errors.hpp"

namespace hgraph {

EdgeRef make_edge(NodeId a, NodeId b, Weight w) {
  if (a == b) throw std::invalid_argument("self-loop on node " + std::to_string(a));
  return a < b ? EdgeRef{a, b, w} : EdgeRef{b, a, w};
}

std::span<const Neighbor> Graph::neighbors(NodeId v) const {
  if (v >= node_count()) throw NotFound("node " + std::to_string(v) + " out of range");
  return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

std::size_t Graph::degree(NodeId v) const { return neighbors(v).size(); }

Weight Graph::weighted_degree(NodeId v) const {
  Weight total = 0;
  for (const auto& n : neighbors(v)) total += n.w;
  return total;
}

std::optional<Weight> Graph::edge_weight(NodeId a, NodeId b) const {
  auto row = neighbors(a);
  auto it = std::lower_bound(row.begin(), row.end(), b,
                             [](const Neighbor& n, NodeId id) { return n.node < id; });
  if (it == row.end() || it->node != b) return std::nullopt;
  return it->w;
}

std::optional<std::string> Graph::label(NodeId v) const {
  auto it = labels_.find(v);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

void GraphBuilder::reserve_nodes(std::size_t n) { node_count_ = std::max(node_count_, n); }

void GraphBuilder::add_edge(NodeId a, NodeId b, Weight w) {
  if (!std::isfinite(w) || w <= 0) {
    throw std::invalid_argument("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                ") has non-positive weight");
  }
  reserve_nodes(static_cast<std::size_t>(std::max(a, b)) + 1);
  if (a == b) {
    ++self_loops_;
    return;
  }
  pending_.push_back(make_edge(a, b, w));
}

void GraphBuilder::set_label(NodeId v, std::string label) {
  reserve_nodes(static_cast<std::size_t>(v) + 1);
  labels_[v] = std::move(label);
}

Graph GraphBuilder::build() && {
  // Stable sort keeps the insertion order of duplicates, so the summed weight
  // does not depend on the sort implementation.
  std::stable_sort(pending_.begin(), pending_.end(), [](const EdgeRef& a, const EdgeRef& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  Graph g;
  g.edges_.reserve(pending_.size());
  for (const auto& e : pending_) {
    if (!g.edges_.empty() && g.edges_.back().u == e.u && g.edges_.back().v == e.v) {
      g.edges_.back().w += e.w;
      ++merged_;
    } else {
      g.edges_.push_back(e);
    }
  }
  pending_.clear();
  pending_.shrink_to_fit();

  g.offsets_.assign(node_count_ + 1, 0);
  for (const auto& e : g.edges_) {
    ++g.offsets_[e.u + 1];
    ++g.offsets_[e.v + 1];
  }
  for (std::size_t i = 0; i < node_count_; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.adjacency_.resize(2 * g.edges_.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // Edges are sorted by (u, v), so filling rows in edge order leaves every
  // row sorted by neighbor id.
  for (const auto& e : g.edges_) g.adjacency_[cursor[e.v]++] = {e.u, e.w};
  for (const auto& e : g.edges_) g.adjacency_[cursor[e.u]++] = {e.v, e.w};
  for (std::size_t i = 0; i < node_count_; ++i) {
    std::sort(g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
              g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
  g.labels_ = std::move(labels_);
  return g;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

NodeId parse_node(std::string_view s, std::size_t line) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value > 0xFFFFFFFEull) {
    throw ParseError("invalid node id '" + std::string(s) + "'", line);
  }
  return static_cast<NodeId>(value);
}

Weight parse_weight(std::string_view s, std::size_t line) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
    throw ParseError("invalid weight '" + std::string(s) + "'", line);
  }
  if (value < 0) throw ParseError("negative weight " + std::string(s), line);
  if (value == 0) throw ParseError("zero weight", line);
  return value;
}

}  // namespace

std::string format_weight(Weight w) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), w);
  if (ec != std::errc{}) throw std::runtime_error("weight formatting failed");
  return std::string(buf, ptr);
}

EdgeListRecords parse_edge_list(std::istream& in) {
  EdgeListRecords rec;
  std::string line;
  std::size_t lineno = 0;
  auto note_id = [&](NodeId v) {
    rec.max_id_plus_one = std::max(rec.max_id_plus_one, static_cast<std::size_t>(v) + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view sv(line);
    if (sv.rfind("#L\t", 0) == 0) {
      auto rest = sv.substr(3);
      auto tab = rest.find('\t');
      if (tab == std::string_view::npos) throw ParseError("label line without label", lineno);
      NodeId id = parse_node(rest.substr(0, tab), lineno);
      note_id(id);
      rec.labels.emplace_back(id, std::string(rest.substr(tab + 1)));
      continue;
    }
    if (sv.rfind("#N\t", 0) == 0) {
      auto fields = split_fields(sv.substr(3));
      if (fields.size() != 1) throw ParseError("malformed node-count header", lineno);
      std::uint64_t n = 0;
      auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), n);
      if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size()) {
        throw ParseError("malformed node-count header", lineno);
      }
      rec.declared_nodes = static_cast<std::size_t>(n);
      continue;
    }
    if (!sv.empty() && (sv.front() == '#' || sv.front() == '%')) continue;
    auto fields = split_fields(sv);
    if (fields.empty()) continue;
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError("expected 'u v [w]', got " + std::to_string(fields.size()) + " fields",
                       lineno);
    }
    NodeId u = parse_node(fields[0], lineno);
    NodeId v = parse_node(fields[1], lineno);
    Weight w = fields.size() == 3 ? parse_weight(fields[2], lineno) : 1.0;
    note_id(u);
    note_id(v);
    rec.edges.push_back({u, v, w});
  }
  return rec;
}

LoadedGraph load_edge_list(std::istream& in) {
  auto rec = parse_edge_list(in);
  std::size_t n = rec.max_id_plus_one;
  if (rec.declared_nodes) {
    if (*rec.declared_nodes < n) {
      throw ParseError("node-count header smaller than largest node id", 1);
    }
    n = *rec.declared_nodes;
  }
  GraphBuilder b(n);
  for (const auto& e : rec.edges) b.add_edge(e.u, e.v, e.w);
  for (auto& [id, label] : rec.labels) b.set_label(id, std::move(label));
  LoadedGraph out;
  out.dropped_self_loops = b.dropped_self_loops();
  out.graph = std::move(b).build();
  out.merged_duplicates = b.merged_duplicates();
  return out;
}

LoadedGraph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StorageError("cannot open " + path);
  return load_edge_list(in);
}

void save_edge_list(const Graph& g, std::ostream& out) {
  out << "#N\t" << g.node_count() << '\n';
  for (const auto& [id, label] : g.labels()) out << "#L\t" << id << '\t' << label << '\n';
  for (const auto& e : g.edges()) out << e.u << '\t' << e.v << '\t' << format_weight(e.w) << '\n';
}

void save_edge_list_file(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write " + path);
  save_edge_list(g, out);
  if (!out) throw StorageError("write failed for " + path);
}

std::uint64_t graph_checksum(const Graph& g) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xFF;
      h *= 1099511628211ull;
    }
  };
  mix(g.node_count());
  for (const auto& e : g.edges()) {
    mix(e.u);
    mix(e.v);
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(e.w));
    std::memcpy(&bits, &e.w, sizeof(bits));
    mix(bits);
  }
  return h;
}

}  // namespace hgraph
