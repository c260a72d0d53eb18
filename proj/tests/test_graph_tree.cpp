#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "hgraph/errors.hpp"
#include "hgraph/graph_tree.hpp"
#include "oracles.hpp"
#include "tree_checks.hpp"

using namespace hgraph;

namespace {

// Four leaves under two internal nodes:
//   s000 = {0,1,2}  s001 = {3,4}  s010 = {5,6}  s011 = {7,8}
Graph four_leaf_graph() {
  GraphBuilder b(9);
  for (auto [u, v] : std::vector<std::pair<NodeId, NodeId>>{
           {0, 1}, {1, 2}, {3, 4}, {2, 3}, {2, 4}, {5, 6}, {7, 8}, {6, 7}, {0, 5}})
    b.add_edge(u, v);
  b.set_label(2, "two");
  b.set_label(7, "seven");
  b.set_label(8, "seven");
  return std::move(b).build();
}

PartitionAssignment four_leaf_assignment() {
  return PartitionAssignment(2, {{0, 0}, {0, 0}, {0, 0}, {0, 1}, {0, 1}, {1, 0}, {1, 0}, {1, 1}, {1, 1}});
}

std::vector<EdgeRef> edges(std::initializer_list<std::pair<NodeId, NodeId>> list) {
  std::vector<EdgeRef> out;
  for (auto [u, v] : list) out.push_back(make_edge(u, v));
  return out;
}

class FourLeaf : public ::testing::Test {
 protected:
  oracle::TempDir dir{"fourleaf"};
  Graph g = four_leaf_graph();
  GraphTree t = GraphTree::build(g, four_leaf_assignment(), dir.path());
};

}  // namespace

TEST_F(FourLeaf, RecordIdsAndShape) {
  EXPECT_EQ(t.records().size(), 7u);
  for (const char* id : {"s0", "s00", "s01", "s000", "s001", "s010", "s011"}) EXPECT_TRUE(t.find(id)) << id;
  EXPECT_EQ(t.stats().h, 3u);
  EXPECT_EQ(t.stats().lsn, 4u);
  EXPECT_EQ(t.stats().sn, 3u);
  EXPECT_TRUE(t.record("s010").leaf);
  EXPECT_FALSE(t.record("s01").leaf);
}

TEST_F(FourLeaf, SiblingSuperEdgeMatchesCrossingEdges) {
  EXPECT_EQ(t.snc("s000", "s001"), edges({{2, 3}, {2, 4}}));
  EXPECT_EQ(t.snc("s001", "s000"), edges({{2, 3}, {2, 4}}));
  const auto& s00 = t.record("s00");
  ASSERT_EQ(s00.super_edges.size(), 1u);
  EXPECT_EQ(s00.super_edges[0].weight(), 2.0);
  EXPECT_EQ(t.snc("s010", "s011"), edges({{6, 7}}));
  EXPECT_EQ(t.snc("s00", "s01"), edges({{0, 5}}));
}

TEST_F(FourLeaf, NonSiblingFiltersByOpenNodes) {
  EXPECT_EQ(t.snc("s000", "s010"), edges({{0, 5}}));
  EXPECT_TRUE(t.snc("s000", "s011").empty());
  EXPECT_TRUE(t.snc("s001", "s01").empty());
  EXPECT_EQ(t.snc("s00", "s010"), edges({{0, 5}}));
}

TEST_F(FourLeaf, NestedAndUnknownRejected) {
  EXPECT_THROW(t.snc("s0", "s000"), NestedSuperNodes);
  EXPECT_THROW(t.snc("s001", "s00"), NestedSuperNodes);
  EXPECT_THROW(t.snc("s01", "s01"), NestedSuperNodes);
  EXPECT_THROW(t.snc("s0", "s9"), NotFound);
}

TEST_F(FourLeaf, OpenNodes) {
  EXPECT_EQ(t.record("s000").open_nodes, (std::vector<NodeId>{0, 2}));
  EXPECT_EQ(t.record("s001").open_nodes, (std::vector<NodeId>{3, 4}));
  EXPECT_EQ(t.record("s00").open_nodes, (std::vector<NodeId>{0}));
  EXPECT_EQ(t.record("s01").open_nodes, (std::vector<NodeId>{5}));
  EXPECT_TRUE(t.record("s0").open_nodes.empty());
}

TEST_F(FourLeaf, Gnc) {
  EXPECT_EQ(t.gnc(2), edges({{2, 3}, {2, 4}}));
  EXPECT_EQ(t.gnc(0), edges({{0, 5}}));
  EXPECT_EQ(t.gnc(5), edges({{0, 5}}));
  EXPECT_TRUE(t.gnc(1).empty());
  EXPECT_THROW(t.gnc(9), NotFound);
}

TEST_F(FourLeaf, CoverageAndAncestors) {
  EXPECT_EQ(t.coverage("s0").size(), 9u);
  EXPECT_EQ(t.coverage("s01"), (std::vector<NodeId>{5, 6, 7, 8}));
  EXPECT_EQ(t.coverage("s000"), (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(t.ancestors("s000"), (std::vector<std::string>{"s00", "s0"}));
  EXPECT_TRUE(t.ancestors("s0").empty());
  EXPECT_FALSE(t.parent("s0").has_value());
  EXPECT_EQ(t.parent("s011").value(), "s01");
  EXPECT_THROW(t.coverage("nope"), NotFound);
}

TEST_F(FourLeaf, LeafFilesHoldInternalEdges) {
  auto leaf = t.load_leaf("s000");
  EXPECT_EQ(leaf->global_ids, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(leaf->graph.edge_count(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "leaves" / "s000.edges"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "leaves" / "s000.nodes"));
  EXPECT_THROW(t.load_leaf("s00"), NotFound);
}

TEST_F(FourLeaf, LabelSearch) {
  auto hit = t.label_search("two");
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->node, 2u);
  EXPECT_EQ(hit->leaf_id, "s000");
  EXPECT_FALSE(t.label_search("absent"));
  EXPECT_EQ(t.label_candidates("seven"), (std::vector<NodeId>{7, 8}));
  EXPECT_EQ(resolve_node(t, "two"), 2u);
  EXPECT_EQ(resolve_node(t, "4"), 4u);
  EXPECT_THROW(resolve_node(t, "seven"), AmbiguousLabel);
  EXPECT_THROW(resolve_node(t, "absent"), NotFound);
  EXPECT_THROW(resolve_node(t, "99"), NotFound);
}

TEST_F(FourLeaf, ConservationAndOpenNodeOracles) {
  auto a = four_leaf_assignment();
  EXPECT_TRUE(oracle::edge_conservation(g, a, t).empty());
  EXPECT_TRUE(oracle::open_nodes(g, a, t).empty());
}

TEST(GraphTree, NoCrossingEdgesMeansNoSuperEdges) {
  GraphBuilder b(6);
  b.add_edge(0, 1);
  b.add_edge(2, 3);
  b.add_edge(4, 5);
  auto g = std::move(b).build();
  PartitionAssignment a(3, {{0}, {0}, {1}, {1}, {2}, {2}});
  oracle::TempDir dir("nocross");
  auto t = GraphTree::build(g, a, dir.path());
  for (const auto& r : t.records()) {
    EXPECT_TRUE(r.super_edges.empty());
    EXPECT_TRUE(r.open_nodes.empty());
  }
  EXPECT_TRUE(t.snc("s00", "s02").empty());
  EXPECT_EQ(t.stats().resident_edges, 0u);
}

TEST(GraphTree, SingleNodeTree) {
  GraphBuilder b(1);
  auto g = std::move(b).build();
  auto a = partition_recursive(g, {5, 5}, 1);
  oracle::TempDir dir("single");
  auto t = GraphTree::build(g, a, dir.path());
  ASSERT_EQ(t.records().size(), 1u);
  EXPECT_TRUE(t.record("s0").leaf);
  EXPECT_TRUE(t.gnc(0).empty());
  EXPECT_EQ(t.load_leaf("s0")->global_ids.size(), 1u);
}

TEST(GraphTree, AssignmentMismatchRejected) {
  auto g = four_leaf_graph();
  oracle::TempDir dir("mismatch");
  EXPECT_THROW(GraphTree::build(g, PartitionAssignment(2, {{0}, {1}}), dir.path()), AssignmentError);
}

TEST(GraphTree, WideFanOutUsesSlashIds) {
  auto g = generate_synthetic(400, 4, 3);
  auto a = partition_recursive(g, {12, 3}, 1);
  oracle::TempDir dir("wide");
  auto t = GraphTree::build(g, a, dir.path());
  EXPECT_TRUE(t.find("s0/11"));
  EXPECT_TRUE(t.find("s0/11/3"));
  EXPECT_EQ(child_record_id("s0/11", 3, 12), "s0/11/3");
  EXPECT_EQ(child_record_id("s04", 3, 5), "s043");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "leaves" / "s0_11_3.edges"));
  EXPECT_TRUE(oracle::edge_conservation(g, a, t).empty());
}

struct OracleCase {
  std::size_t n;
  double degree;
  std::uint32_t k;
  std::uint32_t levels;
  int assignment;  // 0 built-in, 1 random, 2 built-in with another seed
};

void PrintTo(const OracleCase& c, std::ostream* os) {
  *os << c.n << " nodes, " << c.k << "x" << c.levels << ", assignment " << c.assignment;
}

class TreeOracle : public ::testing::TestWithParam<OracleCase> {};

TEST_P(TreeOracle, MatchesBruteForce) {
  const auto c = GetParam();
  std::mt19937_64 rng(c.n * 31 + c.k);
  auto g = generate_synthetic(c.n, c.degree, c.n + c.k);
  PartitionAssignment a = c.assignment == 1 ? oracle::random_assignment(c.n, c.k, c.levels, rng)
                                            : partition_recursive(g, {c.k, c.levels}, 1 + c.assignment);
  oracle::TempDir dir("oracle");
  auto t = GraphTree::build(g, a, dir.path());
  auto conservation = oracle::edge_conservation(g, a, t);
  ASSERT_TRUE(conservation.empty()) << conservation.front();
  auto open = oracle::open_nodes(g, a, t);
  ASSERT_TRUE(open.empty()) << open.front();
  auto q = oracle::check_queries(g, a, t, 150, 0.25, rng);
  ASSERT_TRUE(q.failures.empty()) << q.failures.front();
  EXPECT_GT(q.snc_pairs, 0u);

  std::size_t internal = 0;
  for (const auto& r : t.records()) internal += r.internal_edges;
  EXPECT_EQ(internal + t.stats().resident_edges, g.edge_count());

  // Disjoint SuperEdges under one parent.
  for (const auto& r : t.records()) {
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& se : r.super_edges) {
      EXPECT_DOUBLE_EQ(se.weight(), static_cast<double>(se.size()));
      for (const auto& e : se.edges()) EXPECT_TRUE(seen.insert({e.u, e.v}).second);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Cases, TreeOracle,
                         ::testing::Values(OracleCase{300, 4, 2, 4, 0}, OracleCase{300, 4, 2, 4, 1},
                                           OracleCase{300, 4, 2, 4, 2}, OracleCase{1000, 6, 4, 3, 0},
                                           OracleCase{1000, 6, 4, 4, 1}, OracleCase{2000, 3, 3, 4, 0},
                                           OracleCase{500, 10, 5, 3, 1}),
                         [](const ::testing::TestParamInfo<OracleCase>& info) {
                           const auto& c = info.param;
                           return "n" + std::to_string(c.n) + "_k" + std::to_string(c.k) + "x" +
                                  std::to_string(c.levels) + "_a" + std::to_string(c.assignment);
                         });

TEST(GraphTree, AnswersDependOnlyOnAssignment) {
  auto g = generate_synthetic(600, 5, 17);
  auto a = partition_recursive(g, {3, 3}, 4);
  std::ostringstream text;
  save_assignment(a, text);
  std::istringstream in(text.str());
  auto external = load_assignment(in, g.node_count());
  oracle::TempDir d1("origin1"), d2("origin2");
  auto t1 = GraphTree::build(g, a, d1.path());
  auto t2 = GraphTree::build(g, external, d2.path());
  for (NodeId v = 0; v < g.node_count(); ++v) ASSERT_EQ(t1.gnc(v), t2.gnc(v));
  EXPECT_EQ(t1.manifest_text(d1.path()), t2.manifest_text(d2.path()));
}

TEST(Persistence, RoundTripIsBitExact) {
  auto g = generate_synthetic(800, 5, 2);
  GraphBuilder b(g.node_count());
  for (const auto& e : g.edges()) b.add_edge(e.u, e.v, 0.5 + (e.u % 7) * 0.25);
  b.set_label(10, "ten");
  b.set_label(11, "eleven");
  g = std::move(b).build();
  auto a = partition_recursive(g, {3, 4}, 8);
  oracle::TempDir dir("persist");
  auto t = GraphTree::build(g, a, dir.path());
  t.save(dir.path());
  auto reopened = GraphTree::open(dir.path());
  EXPECT_EQ(reopened.manifest_text(dir.path()), t.manifest_text(dir.path()));
  EXPECT_EQ(reopened.leaf_cache().loads(), 0u);
  EXPECT_EQ(reopened.label_search("ten")->node, 10u);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    auto x = static_cast<RecordIndex>(rng() % t.records().size());
    auto y = static_cast<RecordIndex>(rng() % t.records().size());
    if (x == y || t.is_ancestor(x, y) || t.is_ancestor(y, x)) continue;
    ASSERT_EQ(reopened.snc(x, y), t.snc(x, y));
  }
  for (NodeId v = 0; v < g.node_count(); v += 3) ASSERT_EQ(reopened.gnc(v), t.gnc(v));
  // Queries above never touch leaf files.
  EXPECT_EQ(reopened.leaf_cache().loads(), 0u);
  EXPECT_EQ(reopened.stats().resident_edges, t.stats().resident_edges);
  EXPECT_EQ(reopened.stats().measured_f_per_level, t.stats().measured_f_per_level);
}

TEST(Persistence, EmptyGraphRoundTrips) {
  Graph g;
  PartitionAssignment a(2, {});
  oracle::TempDir dir("empty");
  auto t = GraphTree::build(g, a, dir.path());
  t.save(dir.path());
  auto back = GraphTree::open(dir.path());
  EXPECT_EQ(back.node_count(), 0u);
  EXPECT_EQ(back.manifest_text(dir.path()), t.manifest_text(dir.path()));
}

TEST(Persistence, VersionAndChecksumChecked) {
  auto g = four_leaf_graph();
  oracle::TempDir dir("corrupt");
  auto t = GraphTree::build(g, four_leaf_assignment(), dir.path());
  t.save(dir.path());
  const auto manifest = dir.path() / GraphTree::kManifestName;
  std::string text;
  {
    std::ifstream in(manifest);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  auto write = [&](const std::string& s) { std::ofstream(manifest, std::ios::trunc) << s; };

  auto tampered = text;
  auto pos = tampered.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos);
  tampered.replace(pos, 11, "\"version\":9");
  write(tampered);
  EXPECT_THROW(GraphTree::open(dir.path()), StorageError);

  tampered = text;
  pos = tampered.find("\"open_nodes\":[0,2]");
  ASSERT_NE(pos, std::string::npos);
  tampered.replace(pos, 18, "\"open_nodes\":[0,1]");
  write(tampered);
  EXPECT_THROW(GraphTree::open(dir.path()), StorageError);

  write("{not json");
  EXPECT_THROW(GraphTree::open(dir.path()), StorageError);
  std::filesystem::remove(manifest);
  EXPECT_THROW(GraphTree::open(dir.path()), StorageError);
}

TEST(Persistence, CorruptLeafFileDetected) {
  auto g = four_leaf_graph();
  oracle::TempDir dir("leafcorrupt");
  auto t = GraphTree::build(g, four_leaf_assignment(), dir.path());
  t.save(dir.path());
  auto reopened = GraphTree::open(dir.path());
  std::ofstream(dir.path() / "leaves" / "s000.edges", std::ios::app) << "0\t2\n";
  EXPECT_THROW(reopened.load_leaf("s000"), StorageError);
  std::filesystem::remove(dir.path() / "leaves" / "s001.edges");
  EXPECT_THROW(reopened.load_leaf("s001"), StorageError);
  EXPECT_EQ(reopened.load_leaf("s010")->graph.edge_count(), 1u);
}

TEST(Persistence, ConcurrentQueriesAgree) {
  auto g = generate_synthetic(1500, 6, 5);
  auto a = partition_recursive(g, {4, 3}, 2);
  oracle::TempDir dir("threads");
  auto t = GraphTree::build(g, a, dir.path());
  std::vector<std::vector<EdgeRef>> expected(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) expected[v] = t.gnc(v);
  std::atomic<int> mismatches{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w) {
    pool.emplace_back([&, w] {
      for (NodeId v = static_cast<NodeId>(w); v < g.node_count(); v += 4) {
        if (t.gnc(v) != expected[v]) ++mismatches;
        t.load_leaf(t.record(t.leaf_of(v)).id);
      }
    });
  }
  for (auto& th : pool) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST(Complexity, HeightOfCompleteTrees) {
  EXPECT_EQ(complete_tree_height(781, 5), 5u);
  EXPECT_EQ(complete_tree_height(1, 2), 1u);
  EXPECT_EQ(complete_tree_height(3, 2), 2u);
  EXPECT_EQ(complete_tree_height(4, 2), 3u);
  EXPECT_EQ(superedges_per_record(5), 10u);
  EXPECT_EQ(superedges_per_record(2), 1u);
}

TEST(Complexity, ExpectedSuperEdgeSizes) {
  auto f = expected_superedge_sizes(1000, 0.5, 2, 4);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_DOUBLE_EQ(f[0], 500.0);
  EXPECT_DOUBLE_EQ(f[1], 250.0);
  EXPECT_DOUBLE_EQ(f[2], 125.0);
  auto g = expected_superedge_sizes(6000, 0.8, 4, 3);
  EXPECT_DOUBLE_EQ(g[0], 800.0);
  EXPECT_DOUBLE_EQ(g[1], 800.0 * 0.8 / 6);
}

TEST(Complexity, StatsOfBuiltTree) {
  auto g = generate_synthetic(2000, 8, 6);
  auto a = partition_recursive(g, {4, 3}, 1);
  oracle::TempDir dir("stats");
  auto t = GraphTree::build(g, a, dir.path());
  const auto& s = t.stats();
  EXPECT_EQ(s.tn, s.sn + s.lsn);
  EXPECT_EQ(s.tn, 21u);
  EXPECT_EQ(s.h, 3u);
  EXPECT_EQ(complete_tree_height(s.tn, s.k), s.h);
  EXPECT_DOUBLE_EQ(s.p, 2000.0 / 16);
  EXPECT_DOUBLE_EQ(s.d, 4.0);
  EXPECT_GT(s.r, 0.0);
  EXPECT_LT(s.r, 1.0);
  ASSERT_EQ(s.f_per_level.size(), 2u);
  EXPECT_DOUBLE_EQ(s.f_per_level[0], 8000 * s.r / 6);
}
