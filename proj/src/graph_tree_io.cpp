// Graph-Tree construction and persistence: the bottom-up fill, leaf files and
// the JSON manifest.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hgraph/errors.hpp"
#include "hgraph/graph_tree.hpp"

namespace hgraph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t pos = 0;
  auto v = std::stoull(s, &pos, 16);
  if (pos != s.size()) throw StorageError("malformed checksum '" + s + "'");
  return v;
}

std::string leaf_file_stem(const std::string& id) {
  std::string stem = id;
  std::replace(stem.begin(), stem.end(), '/', '_');
  return "leaves/" + stem;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StorageError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StorageError("write failed for " + p.string());
}

// An edge that cannot be resolved inside the record that propagates it.
struct External {
  EdgeRef edge;
  NodeId inside;
};

}  // namespace

GraphTree GraphTree::build(const Graph& g, const PartitionAssignment& a, const fs::path& storage_dir,
                           std::size_t cache_capacity) {
  if (a.node_count() != g.node_count()) {
    throw AssignmentError("assignment covers " + std::to_string(a.node_count()) +
                          " nodes but the graph has " + std::to_string(g.node_count()));
  }
  a.validate();

  GraphTree t;
  t.cache_ = std::make_unique<LeafCache>(cache_capacity);
  t.node_count_ = g.node_count();
  t.edge_count_ = g.edge_count();
  t.k_ = a.k();
  t.graph_checksum_ = hgraph::graph_checksum(g);
  t.storage_dir_ = storage_dir;
  t.labels_ = g.labels();

  // Trie over the assignment paths, then renumbered in preorder so that
  // parents precede children and siblings follow their path component.
  struct Proto {
    std::map<std::uint32_t, std::uint32_t> kids;
    std::vector<NodeId> members;
  };
  std::vector<Proto> proto(1);
  std::vector<std::uint32_t> proto_leaf(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    std::uint32_t cur = 0;
    for (auto comp : a.path(v)) {
      auto it = proto[cur].kids.find(comp);
      if (it == proto[cur].kids.end()) {
        proto.emplace_back();
        it = proto[cur].kids.emplace(comp, static_cast<std::uint32_t>(proto.size() - 1)).first;
      }
      cur = it->second;
    }
    proto[cur].members.push_back(v);
    proto_leaf[v] = cur;
  }
  std::vector<RecordIndex> renumber(proto.size());
  {
    struct Item {
      std::uint32_t proto;
      std::optional<RecordIndex> parent;
      std::uint32_t component;
    };
    std::vector<Item> stack{{0, std::nullopt, 0}};
    while (!stack.empty()) {
      Item it = stack.back();
      stack.pop_back();
      TreeRecord r;
      r.parent = it.parent;
      r.path_component = it.component;
      if (it.parent) {
        auto& p = t.records_[*it.parent];
        r.id = child_record_id(p.id, it.component, t.k_);
        r.level = p.level + 1;
        r.child_position = static_cast<std::uint32_t>(p.children.size());
        p.children.push_back(static_cast<RecordIndex>(t.records_.size()));
      } else {
        r.id = "s0";
        r.level = 1;
      }
      r.leaf = proto[it.proto].kids.empty();
      r.members = std::move(proto[it.proto].members);
      renumber[it.proto] = static_cast<RecordIndex>(t.records_.size());
      t.records_.push_back(std::move(r));
      auto self = renumber[it.proto];
      for (auto kid = proto[it.proto].kids.rbegin(); kid != proto[it.proto].kids.rend(); ++kid) {
        stack.push_back({kid->second, self, kid->first});
      }
    }
  }
  t.node_leaf_.resize(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) t.node_leaf_[v] = renumber[proto_leaf[v]];
  for (auto& r : t.records_) {
    t.levels_ = std::max(t.levels_, r.level);
  }

  fs::create_directories(storage_dir / "leaves");

  // Post-order fill. Each call returns the record's unresolved external edges.
  auto fill = [&](auto&& self, RecordIndex i) -> std::vector<External> {
    std::vector<External> pending;
    if (t.records_[i].leaf) {
      auto& r = t.records_[i];
      std::string edges_text = "#N\t" + std::to_string(g.node_count()) + "\n";
      std::string nodes_text;
      for (NodeId v : r.members) {
        nodes_text += std::to_string(v);
        nodes_text += '\n';
        if (auto lbl = g.label(v)) edges_text += "#L\t" + std::to_string(v) + "\t" + *lbl + "\n";
      }
      for (NodeId v : r.members) {
        bool open = false;
        for (const auto& nb : g.neighbors(v)) {
          if (t.node_leaf_[nb.node] == i) {
            if (v < nb.node) {
              edges_text += std::to_string(v) + "\t" + std::to_string(nb.node) + "\t" +
                            format_weight(nb.w) + "\n";
              ++r.internal_edges;
            }
          } else {
            pending.push_back({make_edge(v, nb.node, nb.w), v});
            open = true;
          }
        }
        if (open) r.open_nodes.push_back(v);
      }
      r.leaf_file = leaf_file_stem(r.id);
      write_file(storage_dir / (r.leaf_file + ".edges"), edges_text);
      write_file(storage_dir / (r.leaf_file + ".nodes"), nodes_text);
      r.leaf_checksum = fnv1a(nodes_text, fnv1a(edges_text));
      return pending;
    }

    const auto children = t.records_[i].children;
    std::vector<std::vector<External>> from_child;
    from_child.reserve(children.size());
    for (auto c : children) from_child.push_back(self(self, c));

    // Match the two halves of each crossing edge.
    std::unordered_map<std::uint64_t, std::uint32_t> first_seen;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<EdgeRef>> matched;
    for (std::uint32_t pos = 0; pos < from_child.size(); ++pos) {
      for (const auto& ext : from_child[pos]) {
        auto key = edge_key(ext.edge.u, ext.edge.v);
        auto it = first_seen.find(key);
        if (it != first_seen.end()) {
          matched[{it->second, pos}].push_back(ext.edge);
          first_seen.erase(it);
        } else {
          first_seen.emplace(key, pos);
        }
      }
    }
    auto& r = t.records_[i];
    for (auto& [pair, edges] : matched) {
      r.super_edges.emplace_back(children[pair.first], children[pair.second], std::move(edges));
    }
    for (auto& list : from_child) {
      for (const auto& ext : list) {
        if (first_seen.count(edge_key(ext.edge.u, ext.edge.v))) {
          pending.push_back(ext);
          r.open_nodes.push_back(ext.inside);
        }
      }
      list.clear();
      list.shrink_to_fit();
    }
    std::sort(r.open_nodes.begin(), r.open_nodes.end());
    r.open_nodes.erase(std::unique(r.open_nodes.begin(), r.open_nodes.end()), r.open_nodes.end());
    return pending;
  };
  auto leftover = fill(fill, t.root_index());
  if (!leftover.empty()) {
    throw std::logic_error("graph-tree fill left " + std::to_string(leftover.size()) +
                           " unresolved edges at the root");
  }
  t.finalize();
  return t;
}

std::shared_ptr<const LeafSubgraph> GraphTree::read_leaf(RecordIndex i) const {
  const auto& r = records_[i];
  const auto base = storage_dir_ / r.leaf_file;
  std::string edges_text = read_file(base.string() + ".edges");
  std::string nodes_text = read_file(base.string() + ".nodes");
  if (fnv1a(nodes_text, fnv1a(edges_text)) != r.leaf_checksum) {
    throw StorageError("leaf " + r.id + ": checksum mismatch in " + base.string());
  }
  auto out = std::make_shared<LeafSubgraph>();
  out->leaf_id = r.id;
  std::istringstream nodes_in(nodes_text);
  std::string line;
  while (std::getline(nodes_in, line)) {
    if (!line.empty()) out->global_ids.push_back(static_cast<NodeId>(std::stoul(line)));
  }
  if (out->global_ids != r.members) throw StorageError("leaf " + r.id + ": member list mismatch");

  std::istringstream edges_in(edges_text);
  auto rec = parse_edge_list(edges_in);
  GraphBuilder b(out->global_ids.size());
  auto local = [&](NodeId global) {
    auto id = out->local_id(global);
    if (!id) throw StorageError("leaf " + r.id + ": node " + std::to_string(global) + " is not a member");
    return *id;
  };
  for (const auto& e : rec.edges) b.add_edge(local(e.u), local(e.v), e.w);
  for (auto& [id, text] : rec.labels) b.set_label(local(id), std::move(text));
  out->graph = std::move(b).build();
  if (out->graph.edge_count() != r.internal_edges) {
    throw StorageError("leaf " + r.id + ": expected " + std::to_string(r.internal_edges) + " edges");
  }
  return out;
}

std::string GraphTree::manifest_text(const fs::path& dir) const {
  json records = json::array();
  for (const auto& r : records_) {
    json jr;
    jr["id"] = r.id;
    jr["level"] = r.level;
    jr["parent"] = r.parent ? json(*r.parent) : json(nullptr);
    jr["component"] = r.path_component;
    jr["children"] = r.children;
    jr["open_nodes"] = r.open_nodes;
    if (r.leaf) {
      fs::path file = storage_dir_ / r.leaf_file;
      auto rel = fs::absolute(file).lexically_normal().lexically_relative(fs::absolute(dir).lexically_normal());
      jr["leaf"] = {{"file", rel.generic_string()},
                    {"members", r.members},
                    {"internal_edges", r.internal_edges},
                    {"checksum", hex64(r.leaf_checksum)}};
    } else {
      json ses = json::array();
      for (const auto& se : r.super_edges) {
        json edges = json::array();
        for (const auto& e : se.edges()) edges.push_back(json::array({e.u, e.v, e.w}));
        ses.push_back({{"a", se.a()}, {"b", se.b()}, {"weight", se.weight()}, {"edges", std::move(edges)}});
      }
      jr["super_edges"] = std::move(ses);
    }
    records.push_back(std::move(jr));
  }
  json labels = json::array();
  for (const auto& [id, text] : labels_) labels.push_back(json::array({id, text}));
  json body = {{"graph", {{"nodes", node_count_}, {"edges", edge_count_}, {"checksum", hex64(graph_checksum_)}}},
               {"k", k_},
               {"levels", levels_},
               {"records", std::move(records)},
               {"labels", std::move(labels)}};
  const std::string body_text = body.dump();
  json doc = {{"format", "hgraph-tree"},
              {"version", kManifestVersion},
              {"checksum", hex64(fnv1a(body_text))},
              {"body", std::move(body)}};
  return doc.dump() + "\n";
}

void GraphTree::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_file(dir / kManifestName, manifest_text(dir));
}

GraphTree GraphTree::open(const fs::path& dir, std::size_t cache_capacity) {
  const std::string text = read_file(dir / kManifestName);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw StorageError("manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (doc.at("format") != "hgraph-tree") throw StorageError("not a graph-tree manifest");
    if (doc.at("version").get<int>() != kManifestVersion) {
      throw StorageError("manifest version " + doc.at("version").dump() + " is not supported (expected " +
                         std::to_string(kManifestVersion) + ")");
    }
    const json& body = doc.at("body");
    if (hex64(fnv1a(body.dump())) != doc.at("checksum").get<std::string>()) {
      throw StorageError("manifest checksum mismatch");
    }
    GraphTree t;
    t.cache_ = std::make_unique<LeafCache>(cache_capacity);
    t.storage_dir_ = dir;
    t.node_count_ = body.at("graph").at("nodes").get<std::size_t>();
    t.edge_count_ = body.at("graph").at("edges").get<std::size_t>();
    t.graph_checksum_ = parse_hex64(body.at("graph").at("checksum").get<std::string>());
    t.k_ = body.at("k").get<std::uint32_t>();
    t.levels_ = body.at("levels").get<std::uint32_t>();
    for (const auto& jr : body.at("records")) {
      TreeRecord r;
      r.id = jr.at("id").get<std::string>();
      r.level = jr.at("level").get<std::uint32_t>();
      if (!jr.at("parent").is_null()) r.parent = jr.at("parent").get<RecordIndex>();
      r.path_component = jr.at("component").get<std::uint32_t>();
      r.children = jr.at("children").get<std::vector<RecordIndex>>();
      r.open_nodes = jr.at("open_nodes").get<std::vector<NodeId>>();
      if (jr.contains("leaf")) {
        const auto& jl = jr.at("leaf");
        r.leaf = true;
        r.leaf_file = jl.at("file").get<std::string>();
        r.members = jl.at("members").get<std::vector<NodeId>>();
        r.internal_edges = jl.at("internal_edges").get<std::size_t>();
        r.leaf_checksum = parse_hex64(jl.at("checksum").get<std::string>());
      } else {
        for (const auto& js : jr.at("super_edges")) {
          std::vector<EdgeRef> edges;
          for (const auto& je : js.at("edges")) {
            edges.push_back({je.at(0).get<NodeId>(), je.at(1).get<NodeId>(), je.at(2).get<Weight>()});
          }
          r.super_edges.emplace_back(js.at("a").get<RecordIndex>(), js.at("b").get<RecordIndex>(),
                                     std::move(edges));
        }
      }
      t.records_.push_back(std::move(r));
    }
    for (RecordIndex i = 0; i < t.records_.size(); ++i) {
      for (std::uint32_t pos = 0; pos < t.records_[i].children.size(); ++pos) {
        auto c = t.records_[i].children[pos];
        if (c >= t.records_.size() || t.records_[c].parent != i) throw StorageError("manifest tree links are inconsistent");
        t.records_[c].child_position = pos;
      }
    }
    t.node_leaf_.assign(t.node_count_, 0);
    std::size_t covered = 0;
    for (RecordIndex i = 0; i < t.records_.size(); ++i) {
      for (NodeId v : t.records_[i].members) {
        if (v >= t.node_count_) throw StorageError("manifest member out of range");
        t.node_leaf_[v] = i;
        ++covered;
      }
    }
    if (covered != t.node_count_) throw StorageError("manifest leaves do not cover every node");
    for (const auto& jl : body.at("labels")) t.labels_[jl.at(0).get<NodeId>()] = jl.at(1).get<std::string>();
    t.finalize();
    return t;
  } catch (const json::exception& e) {
    throw StorageError("malformed manifest: " + std::string(e.what()));
  }
}

}  // namespace hgraph
