#include "hgraph/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "hgraph/errors.hpp"

namespace hgraph {

using nlohmann::json;

double round_score(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

json edges_json(const std::vector<EdgeRef>& edges) {
  json out = json::array();
  for (const auto& e : edges) out.push_back({{"u", e.u}, {"v", e.v}, {"w", e.w}});
  return out;
}

namespace {

json label_or_null(const GraphTree& t, NodeId v) {
  auto l = t.label(v);
  return l ? json(*l) : json(nullptr);
}

Response json_response(int status, const json& body) {
  Response r;
  r.status = status;
  r.body = body.dump();
  return r;
}

Response error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}, {"status", status}});
}

json parse_body(std::string_view body) {
  json j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("request body must be a JSON object");
  return j;
}

std::string node_ref(const json& j) {
  if (j.is_number_unsigned()) return std::to_string(j.get<std::uint64_t>());
  if (j.is_string()) return j.get<std::string>();
  throw std::invalid_argument("node must be an id or a label");
}

std::string record_ref(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw std::invalid_argument(std::string("field '") + key + "' must be a supernode id");
  }
  return it->get<std::string>();
}

json super_edge_json(const GraphTree& t, const SuperEdgeRecord& se) {
  return {{"a", t.record(se.a()).id},
          {"b", t.record(se.b()).id},
          {"weight", se.weight()},
          {"size", se.size()}};
}

// Bad requests get 400, semantic violations 422 and unknown ids 404.
struct Unprocessable : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace

json center_piece_json(const CenterPiece& cp, const LeafSubgraph& leaf, const GraphTree& t) {
  auto global = [&](NodeId local) { return leaf.global_id(local); };
  json nodes = json::array();
  for (NodeId v : cp.nodes) {
    nodes.push_back({{"id", global(v)}, {"label", label_or_null(t, global(v))},
                     {"score", round_score(cp.combined[v])}});
  }
  json edges = json::array();
  for (const auto& e : cp.edges) {
    auto edge = make_edge(global(e.u), global(e.v), e.w);
    edges.push_back({{"u", edge.u}, {"v", edge.v}, {"w", edge.w}});
  }
  json paths = json::array();
  for (const auto& p : cp.key_paths) {
    json seq = json::array();
    for (NodeId v : p.nodes) seq.push_back(global(v));
    paths.push_back({{"source", global(p.source)},
                     {"destination", global(p.destination)},
                     {"nodes", seq},
                     {"score", round_score(p.score())},
                     {"new_nodes", p.new_nodes}});
  }
  json queries = json::array();
  for (NodeId q : cp.queries) queries.push_back(global(q));
  return {{"schema", "hgraph.ceps/1"},
          {"leaf", leaf.leaf_id},
          {"queries", queries},
          {"nodes", nodes},
          {"edges", edges},
          {"key_paths", paths},
          {"iratio", cp.iratio ? json(round_score(*cp.iratio)) : json(nullptr)},
          {"total_score", round_score(cp.total_goodness)},
          {"params",
           {{"c", cp.params.c},
            {"tol", cp.params.tol},
            {"max_iter", cp.params.max_iter},
            {"budget", cp.params.budget},
            {"len", cp.params.max_path_len}}},
          {"converged", cp.scores_converged},
          {"timed_out", cp.timed_out},
          {"partial", !cp.scores_converged || cp.timed_out},
          {"skipped_pairs", cp.skipped_pairs},
          {"warnings", cp.warnings}};
}

Service::Service(const GraphTree& tree, ServiceOptions opts) : tree_(tree), opts_(std::move(opts)) {}

template <typename Fn>
Response Service::guarded(Fn&& fn) const {
  ++requests_;
  try {
    return fn();
  } catch (const NotFound& e) {
    return error_response(404, e.what());
  } catch (const NestedSuperNodes& e) {
    return error_response(422, e.what());
  } catch (const AmbiguousLabel& e) {
    auto r = json_response(422, {{"error", e.what()}, {"status", 422}, {"candidates", e.candidates()}});
    return r;
  } catch (const Unprocessable& e) {
    return error_response(422, e.what());
  } catch (const std::invalid_argument& e) {
    return error_response(400, e.what());
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

Response Service::tree() const {
  return guarded([&] {
    json records = json::array();
    for (const auto& r : tree_.records()) {
      json children = json::array();
      for (auto c : r.children) children.push_back(tree_.record(c).id);
      json ses = json::array();
      for (const auto& se : r.super_edges) ses.push_back(super_edge_json(tree_, se));
      records.push_back({{"id", r.id},
                         {"level", r.level},
                         {"parent", r.parent ? json(tree_.record(*r.parent).id) : json(nullptr)},
                         {"leaf", r.leaf},
                         {"children", children},
                         {"coverage_size", r.coverage_size},
                         {"open_nodes", r.open_nodes.size()},
                         {"super_edges", ses}});
    }
    const auto& s = tree_.stats();
    return json_response(200, {{"schema", "hgraph.tree/1"},
                               {"nodes", tree_.node_count()},
                               {"edges", tree_.edge_count()},
                               {"k", tree_.k()},
                               {"root", tree_.record(tree_.root_index()).id},
                               {"stats",
                                {{"tn", s.tn},
                                 {"sn", s.sn},
                                 {"lsn", s.lsn},
                                 {"h", s.h},
                                 {"p", s.p},
                                 {"d", s.d},
                                 {"r", s.r},
                                 {"resident_edges", s.resident_edges},
                                 {"f_per_level", s.f_per_level}}},
                               {"records", records}});
  });
}

Response Service::supernode(std::string_view id) const {
  return guarded([&] {
    const auto i = tree_.index_of(id);
    const auto& r = tree_.record(i);
    json children = json::array();
    for (auto c : r.children) children.push_back(tree_.record(c).id);
    json ses = json::array();
    for (const auto& se : r.super_edges) ses.push_back(super_edge_json(tree_, se));
    json touching = json::array();
    if (r.parent) {
      const auto& p = tree_.record(*r.parent);
      for (auto slot : p.incident(r.child_position)) touching.push_back(super_edge_json(tree_, p.super_edges[slot]));
    }
    json ancestors = tree_.ancestors(id);
    return json_response(200, {{"schema", "hgraph.supernode/1"},
                               {"id", r.id},
                               {"level", r.level},
                               {"parent", r.parent ? json(tree_.record(*r.parent).id) : json(nullptr)},
                               {"ancestors", ancestors},
                               {"leaf", r.leaf},
                               {"children", children},
                               {"coverage_size", r.coverage_size},
                               {"open_node_count", r.open_nodes.size()},
                               {"super_edges", ses},
                               {"sibling_super_edges", touching}});
  });
}

Response Service::leaf(std::string_view id) const {
  return guarded([&] {
    const auto i = tree_.index_of(id);
    if (!tree_.record(i).leaf) throw NotFound("'" + std::string(id) + "' is not a leaf");
    const bool cached = tree_.leaf_cache().contains(tree_.record(i).id);
    const auto t0 = std::chrono::steady_clock::now();
    auto sub = tree_.load_leaf(id);
    const auto micros =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    json nodes = json::array();
    for (NodeId g : sub->global_ids) nodes.push_back({{"id", g}, {"label", label_or_null(tree_, g)}});
    json edges = json::array();
    for (const auto& e : sub->graph.edges()) {
      auto edge = make_edge(sub->global_id(e.u), sub->global_id(e.v), e.w);
      edges.push_back({{"u", edge.u}, {"v", edge.v}, {"w", edge.w}});
    }
    auto resp = json_response(200, {{"schema", "hgraph.leaf/1"},
                                    {"id", sub->leaf_id},
                                    {"nodes", nodes},
                                    {"edges", edges}});
    char dur[48];
    std::snprintf(dur, sizeof dur, "leaf;dur=%.3f", micros / 1000.0);
    resp.headers.emplace_back("X-Leaf-Cache", cached ? "hit" : "miss");
    resp.headers.emplace_back("X-Leaf-Load-Micros", std::to_string(static_cast<long long>(micros)));
    resp.headers.emplace_back("Server-Timing", dur);
    return resp;
  });
}

Response Service::search(std::string_view label) const {
  return guarded([&] {
    if (label.empty()) throw std::invalid_argument("missing 'label' parameter");
    auto hit = tree_.label_search(label);
    if (!hit) throw NotFound("no node labeled '" + std::string(label) + "'");
    json ancestors = tree_.ancestors(hit->leaf_id);
    return json_response(200, {{"schema", "hgraph.search/1"},
                               {"label", std::string(label)},
                               {"node", hit->node},
                               {"leaf", hit->leaf_id},
                               {"ancestors", ancestors},
                               {"candidates", tree_.label_candidates(label)}});
  });
}

Response Service::health() const {
  return guarded([&] {
    const auto& cache = tree_.leaf_cache();
    return json_response(200, {{"status", "ok"},
                               {"nodes", tree_.node_count()},
                               {"edges", tree_.edge_count()},
                               {"records", tree_.records().size()},
                               {"requests", requests_.load()},
                               {"leaf_cache",
                                {{"size", cache.size()},
                                 {"capacity", cache.capacity()},
                                 {"loads", cache.loads()},
                                 {"hits", cache.hits()}}}});
  });
}

Response Service::snc(std::string_view body, bool tsv) const {
  return guarded([&] {
    auto req = parse_body(body);
    const auto a = record_ref(req, "a");
    const auto b = record_ref(req, "b");
    auto edges = tree_.snc(a, b);
    if (tsv || req.value("format", "") == "tsv") {
      Response r;
      r.content_type = "text/tab-separated-values";
      r.body = format_edges_tsv(edges);
      return r;
    }
    return json_response(200, {{"schema", "hgraph.edges/1"},
                               {"a", a},
                               {"b", b},
                               {"count", edges.size()},
                               {"edges", edges_json(edges)}});
  });
}

Response Service::gnc(std::string_view body, bool tsv) const {
  return guarded([&] {
    auto req = parse_body(body);
    if (!req.contains("node")) throw std::invalid_argument("field 'node' is required");
    const NodeId v = resolve_node(tree_, node_ref(req["node"]));
    auto edges = tree_.gnc(v);
    if (tsv || req.value("format", "") == "tsv") {
      Response r;
      r.content_type = "text/tab-separated-values";
      r.body = format_edges_tsv(edges);
      return r;
    }
    json out = json::array();
    for (const auto& e : edges) {
      const NodeId other = e.u == v ? e.v : e.u;
      out.push_back({{"u", e.u},
                     {"v", e.v},
                     {"w", e.w},
                     {"other", other},
                     {"other_label", label_or_null(tree_, other)},
                     {"other_leaf", tree_.record(tree_.leaf_of(other)).id}});
    }
    return json_response(200, {{"schema", "hgraph.gnc/1"},
                               {"node", v},
                               {"label", label_or_null(tree_, v)},
                               {"leaf", tree_.record(tree_.leaf_of(v)).id},
                               {"count", edges.size()},
                               {"edges", out}});
  });
}

Response Service::ceps(std::string_view body) const {
  return guarded([&] {
    auto req = parse_body(body);
    const auto leaf_id = record_ref(req, "leaf");
    auto it = req.find("query_nodes");
    if (it == req.end() || !it->is_array()) throw std::invalid_argument("field 'query_nodes' must be an array");
    if (it->empty()) throw Unprocessable("query set is empty");
    const auto li = tree_.index_of(leaf_id);
    if (!tree_.record(li).leaf) throw Unprocessable("'" + leaf_id + "' is not a leaf");
    auto leaf = tree_.load_leaf(leaf_id);

    std::vector<NodeId> queries;
    for (const auto& q : *it) {
      const NodeId g = resolve_node(tree_, node_ref(q));
      auto local = leaf->local_id(g);
      if (!local) throw Unprocessable("query node " + std::to_string(g) + " is not in leaf " + leaf_id);
      if (std::find(queries.begin(), queries.end(), *local) != queries.end()) {
        throw Unprocessable("query node " + std::to_string(g) + " repeated");
      }
      queries.push_back(*local);
    }
    CepsParams p = opts_.ceps_defaults;
    if (!req.contains("budget")) throw std::invalid_argument("field 'budget' is required");
    p.budget = req["budget"].get<std::size_t>();
    p.max_path_len = req.value("len", p.max_path_len);
    p.c = req.value("c", p.c);
    p.tol = req.value("tol", p.tol);
    p.max_iter = req.value("max_iter", p.max_iter);
    try {
      p.validate(queries.size());
    } catch (const std::invalid_argument& e) {
      throw Unprocessable(e.what());
    }
    auto cp = center_piece(leaf->graph, queries, p);
    return json_response(200, center_piece_json(cp, *leaf, tree_));
  });
}

struct HttpServer::Impl {
  const Service& service;
  httplib::Server server;
  bool bound = false;
  explicit Impl(const Service& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  for (const auto& [k, v] : r.headers) res.set_header(k, v);
  res.set_content(r.body, r.content_type);
}

bool wants_tsv(const httplib::Request& req) {
  if (req.has_param("format")) return req.get_param_value("format") == "tsv";
  return req.get_header_value("Accept").find("text/tab-separated-values") != std::string::npos;
}

}  // namespace

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& s = impl_->server;
  const Service& svc = impl_->service;
  s.Get("/tree", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.tree()); });
  s.Get(R"(/supernode/(.+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.supernode(req.matches[1].str()));
  });
  s.Get(R"(/leaf/(.+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.leaf(req.matches[1].str()));
  });
  s.Get("/search", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.search(req.get_param_value("label")));
  });
  s.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.health()); });
  s.Post("/snc", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.snc(req.body, wants_tsv(req)));
  });
  s.Post("/gnc", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.gnc(req.body, wants_tsv(req)));
  });
  s.Post("/ceps", [&svc](const httplib::Request& req, httplib::Response& res) { send(res, svc.ceps(req.body)); });
  if (svc.options().cors) {
    s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    s.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Expose-Headers", "X-Leaf-Cache, X-Leaf-Load-Micros, Server-Timing");
    });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host.c_str())
                        : (impl_->server.bind_to_port(host.c_str(), port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void HttpServer::listen() {
  if (!impl_->bound) throw std::logic_error("bind() before listen()");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace hgraph
