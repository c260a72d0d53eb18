#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hgraph/ceps.hpp"
#include "hgraph/graph_tree.hpp"

namespace hgraph {

// Scores leave the process rounded to 12 significant digits.
double round_score(double x);

// CenterPiece over a leaf, with node ids mapped back to the host graph.
nlohmann::json center_piece_json(const CenterPiece& cp, const LeafSubgraph& leaf, const GraphTree& t);
nlohmann::json edges_json(const std::vector<EdgeRef>& edges);

struct ServiceOptions {
  bool cors = false;
  CepsParams ceps_defaults = [] {
    CepsParams p;
    p.time_budget = std::chrono::milliseconds(10000);
    return p;
  }();
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

// Endpoint logic without the transport: every handler maps a request onto a
// Response and never throws.
class Service {
 public:
  Service(const GraphTree& tree, ServiceOptions opts = {});

  Response tree() const;
  Response supernode(std::string_view id) const;
  Response leaf(std::string_view id) const;
  Response search(std::string_view label) const;
  Response health() const;
  // `tsv` returns the CLI's TSV edge list instead of JSON.
  Response snc(std::string_view body, bool tsv = false) const;
  Response gnc(std::string_view body, bool tsv = false) const;
  Response ceps(std::string_view body) const;

  const ServiceOptions& options() const { return opts_; }
  std::size_t requests() const { return requests_.load(); }

 private:
  template <typename Fn>
  Response guarded(Fn&& fn) const;

  const GraphTree& tree_;
  ServiceOptions opts_;
  mutable std::atomic<std::size_t> requests_{0};
};

// HTTP transport for a Service.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port; returns the bound port or throws.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hgraph
