#include <gtest/gtest.h>

#include <httplib.h>

#include <chrono>
#include <thread>

#include "hgraph/service.hpp"
#include "oracles.hpp"

using namespace hgraph;
using nlohmann::json;

namespace {

// Two leaves under the root: {0, 1, 2} and {3, 4, 5}. Nodes 1 and 5 share a
// label.
class ServiceTest : public ::testing::Test {
 protected:
  ServiceTest() : dir_("service") {
    GraphBuilder b(6);
    b.add_edge(0, 1);
    b.add_edge(1, 2, 2);
    b.add_edge(0, 2);
    b.add_edge(2, 3, 1.5);
    b.add_edge(1, 4);
    b.add_edge(3, 4);
    b.add_edge(4, 5);
    b.add_edge(3, 5, 2);
    const char* names[] = {"alice", "bob", "carol", "dave", "erin", "bob"};
    for (NodeId v = 0; v < 6; ++v) b.set_label(v, names[v]);
    graph_ = std::move(b).build();
    PartitionAssignment a(2, {{0}, {0}, {0}, {1}, {1}, {1}});
    tree_.emplace(GraphTree::build(graph_, a, dir_.path()));
    service_.emplace(*tree_);
  }

  static json body(const Response& r) { return json::parse(r.body); }

  oracle::TempDir dir_;
  Graph graph_;
  std::optional<GraphTree> tree_;
  std::optional<Service> service_;
};

}  // namespace

TEST_F(ServiceTest, TreeListsRecordsAndSuperEdgeWeights) {
  auto r = service_->tree();
  ASSERT_EQ(r.status, 200);
  auto j = body(r);
  EXPECT_EQ(j["schema"], "hgraph.tree/1");
  ASSERT_EQ(j["records"].size(), 3u);
  EXPECT_EQ(j["root"], "s0");
  const auto& root = j["records"][0];
  EXPECT_EQ(root["children"], json({"s00", "s01"}));
  ASSERT_EQ(root["super_edges"].size(), 1u);
  EXPECT_EQ(root["super_edges"][0]["size"], 2);
  EXPECT_DOUBLE_EQ(root["super_edges"][0]["weight"].get<double>(), 2.5);
  EXPECT_EQ(j["records"][1]["leaf"], true);
  EXPECT_EQ(j["records"][1]["open_nodes"], 2);
  EXPECT_EQ(service_->tree().body, r.body);
}

TEST_F(ServiceTest, SupernodeAndNotFound) {
  auto j = body(service_->supernode("s01"));
  EXPECT_EQ(j["ancestors"], json({"s0"}));
  EXPECT_EQ(j["open_node_count"], 2);
  ASSERT_EQ(j["sibling_super_edges"].size(), 1u);
  EXPECT_EQ(j["sibling_super_edges"][0]["b"], "s01");
  EXPECT_EQ(service_->supernode("s07").status, 404);
  EXPECT_EQ(service_->leaf("s0").status, 404);
}

TEST_F(ServiceTest, LeafReportsCacheState) {
  auto first = service_->leaf("s00");
  ASSERT_EQ(first.status, 200);
  auto header = [](const Response& r, const std::string& name) {
    for (const auto& [k, v] : r.headers)
      if (k == name) return v;
    return std::string();
  };
  EXPECT_EQ(header(first, "X-Leaf-Cache"), "miss");
  auto second = service_->leaf("s00");
  EXPECT_EQ(header(second, "X-Leaf-Cache"), "hit");
  EXPECT_FALSE(header(second, "Server-Timing").empty());
  EXPECT_EQ(first.body, second.body);
  auto j = body(first);
  EXPECT_EQ(j["nodes"].size(), 3u);
  EXPECT_EQ(j["edges"].size(), 3u);
  EXPECT_EQ(j["nodes"][1]["label"], "bob");
}

TEST_F(ServiceTest, SearchByLabel) {
  auto j = body(service_->search("carol"));
  EXPECT_EQ(j["node"], 2);
  EXPECT_EQ(j["leaf"], "s00");
  EXPECT_EQ(j["ancestors"], json({"s0"}));
  auto bob = body(service_->search("bob"));
  EXPECT_EQ(bob["node"], 1);
  EXPECT_EQ(bob["candidates"], json({1, 5}));
  EXPECT_EQ(service_->search("zed").status, 404);
  EXPECT_EQ(service_->search("").status, 400);
}

TEST_F(ServiceTest, SncJsonTsvAndErrors) {
  auto r = service_->snc(R"({"a":"s00","b":"s01"})");
  ASSERT_EQ(r.status, 200);
  auto j = body(r);
  EXPECT_EQ(j["count"], 2);
  EXPECT_EQ(j["edges"][0], json({{"u", 1}, {"v", 4}, {"w", 1.0}}));
  auto tsv = service_->snc(R"({"a":"s01","b":"s00"})", true);
  EXPECT_EQ(tsv.content_type, "text/tab-separated-values");
  EXPECT_EQ(tsv.body, format_edges_tsv(tree_->snc("s00", "s01")));
  EXPECT_EQ(service_->snc(R"({"a":"s0","b":"s00"})").status, 422);
  EXPECT_EQ(service_->snc(R"({"a":"s00","b":"s00"})").status, 422);
  EXPECT_EQ(service_->snc(R"({"a":"s00","b":"s09"})").status, 404);
  EXPECT_EQ(service_->snc("{not json").status, 400);
  EXPECT_EQ(service_->snc(R"({"a":"s00"})").status, 400);
}

TEST_F(ServiceTest, GncByIdAndLabel) {
  auto j = body(service_->gnc(R"({"node":2})"));
  ASSERT_EQ(j["edges"].size(), 1u);
  EXPECT_EQ(j["edges"][0]["other"], 3);
  EXPECT_EQ(j["edges"][0]["other_label"], "dave");
  EXPECT_EQ(j["edges"][0]["other_leaf"], "s01");
  EXPECT_EQ(body(service_->gnc(R"({"node":"carol"})"))["node"], 2);
  auto amb = service_->gnc(R"({"node":"bob"})");
  EXPECT_EQ(amb.status, 422);
  EXPECT_EQ(body(amb)["candidates"], json({1, 5}));
  EXPECT_EQ(service_->gnc(R"({"node":99})").status, 404);
  EXPECT_EQ(service_->gnc(R"({"node":4})", true).body, format_edges_tsv(tree_->gnc(4)));
}

TEST_F(ServiceTest, CepsScoresAreConsistent) {
  auto r = service_->ceps(R"({"leaf":"s01","query_nodes":[3,5],"budget":3})");
  ASSERT_EQ(r.status, 200) << r.body;
  auto j = body(r);
  EXPECT_EQ(j["schema"], "hgraph.ceps/1");
  EXPECT_EQ(j["queries"], json({3, 5}));
  ASSERT_EQ(j["nodes"].size(), 3u);
  double inside = 0;
  for (const auto& n : j["nodes"]) inside += n["score"].get<double>();
  EXPECT_NEAR(j["iratio"].get<double>(), inside / j["total_score"].get<double>(), 1e-9);
  EXPECT_EQ(j["params"]["budget"], 3);
  EXPECT_EQ(j["partial"], false);
  for (const auto& e : j["edges"]) EXPECT_GE(e["u"].get<int>(), 3);
  EXPECT_EQ(service_->ceps(R"({"leaf":"s01","query_nodes":["erin"],"budget":2})").status, 200);
  EXPECT_EQ(service_->ceps(R"({"leaf":"s01","query_nodes":[3,5],"budget":3})").body, r.body);
}

TEST_F(ServiceTest, CepsRejectsBadRequests) {
  EXPECT_EQ(service_->ceps(R"({"leaf":"s01","query_nodes":[],"budget":3})").status, 422);
  EXPECT_EQ(service_->ceps(R"({"leaf":"s01","query_nodes":[0],"budget":3})").status, 422);
  EXPECT_EQ(service_->ceps(R"({"leaf":"s01","query_nodes":[3,4],"budget":1})").status, 422);
  EXPECT_EQ(service_->ceps(R"({"leaf":"s01","query_nodes":[3],"budget":3,"c":1.5})").status, 422);
  EXPECT_EQ(service_->ceps(R"({"leaf":"s0","query_nodes":[3],"budget":3})").status, 422);
  EXPECT_EQ(service_->ceps(R"({"leaf":"s01","query_nodes":[3]})").status, 400);
  EXPECT_EQ(service_->ceps(R"({"leaf":"s77","query_nodes":[3],"budget":2})").status, 404);
}

TEST_F(ServiceTest, HealthCountsRequests) {
  service_->tree();
  auto j = body(service_->health());
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["records"], 3);
  EXPECT_GE(j["requests"].get<int>(), 2);
}

TEST_F(ServiceTest, ServesOverHttp) {
  ServiceOptions opts;
  opts.cors = true;
  Service svc(*tree_, opts);
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread worker([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  httplib::Result health;
  for (int i = 0; i < 100 && !health; ++i) {
    health = client.Get("/health");
    if (!health) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto tree = client.Get("/tree");
  ASSERT_TRUE(tree);
  EXPECT_EQ(tree->body, svc.tree().body);
  EXPECT_EQ(tree->get_header_value("Access-Control-Allow-Origin"), "*");

  auto leaf = client.Get("/leaf/s00");
  ASSERT_TRUE(leaf);
  EXPECT_TRUE(leaf->has_header("X-Leaf-Cache"));

  auto tsv = client.Post("/snc?format=tsv", R"({"a":"s00","b":"s01"})", "application/json");
  ASSERT_TRUE(tsv);
  EXPECT_EQ(tsv->body, format_edges_tsv(tree_->snc("s00", "s01")));

  auto missing = client.Get("/supernode/s05");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  auto search = client.Get("/search?label=dave");
  ASSERT_TRUE(search);
  EXPECT_EQ(json::parse(search->body)["node"], 3);

  auto preflight = client.Options("/ceps");
  ASSERT_TRUE(preflight);
  EXPECT_EQ(preflight->status, 204);

  server.stop();
  worker.join();
}

TEST(RoundScore, TwelveSignificantDigits) {
  EXPECT_EQ(round_score(0.1234567890123456), 0.123456789012);
  EXPECT_EQ(round_score(2.0 / 3), 0.666666666667);
  EXPECT_EQ(round_score(0), 0);
}
