#include <gtest/gtest.h>

#include <sstream>

#include "hgraph/errors.hpp"
#include "hgraph/graph.hpp"

using namespace hgraph;

namespace {

LoadedGraph parse(const std::string& text) {
  std::istringstream in(text);
  return load_edge_list(in);
}

}  // namespace

TEST(EdgeList, DefaultWeightIsOne) {
  auto g = parse("0 1\n1 2").graph;
  EXPECT_EQ(g.node_count(), 3u);
  EXPECT_EQ(g.edge_count(), 2u);
  for (const auto& e : g.edges()) EXPECT_EQ(e.w, 1.0);
}

TEST(EdgeList, DuplicatesSumWeights) {
  auto loaded = parse("0\t1\t2.0\n0\t1\t3.0\n");
  ASSERT_EQ(loaded.graph.edge_count(), 1u);
  EXPECT_EQ(loaded.graph.edges()[0], (EdgeRef{0, 1, 5.0}));
  EXPECT_EQ(loaded.merged_duplicates, 1u);
}

TEST(EdgeList, ReversedDuplicateCollapses) {
  auto g = parse("3 1 1.5\n1 3 0.5\n").graph;
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.edges()[0], (EdgeRef{1, 3, 2.0}));
}

TEST(EdgeList, SelfLoopsDroppedAndCounted) {
  auto loaded = parse("0 0\n0 1\n2 2 4\n");
  EXPECT_EQ(loaded.graph.edge_count(), 1u);
  EXPECT_EQ(loaded.dropped_self_loops, 2u);
  EXPECT_EQ(loaded.graph.node_count(), 3u);
}

TEST(EdgeList, MalformedLineReportsLineNumber) {
  try {
    parse("0 1\n# comment\nx 2\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(EdgeList, NegativeAndZeroWeightsRejected) {
  EXPECT_THROW(parse("0 1 -2\n"), ParseError);
  EXPECT_THROW(parse("0 1 0\n"), ParseError);
  EXPECT_THROW(parse("0 1 nan\n"), ParseError);
}

TEST(EdgeList, LabelsAndNodeHeader) {
  auto g = parse("#N\t5\n#L\t0\tPeter Eades\n#L\t4\tlonely\n0\t1\n").graph;
  EXPECT_EQ(g.node_count(), 5u);
  EXPECT_EQ(g.label(0).value(), "Peter Eades");
  EXPECT_EQ(g.label(4).value(), "lonely");
  EXPECT_FALSE(g.label(1).has_value());
  EXPECT_EQ(g.degree(4), 0u);
}

TEST(EdgeList, RoundTripIsIdentical) {
  auto g = generate_synthetic(300, 5, 7);
  GraphBuilder b(g.node_count());
  for (const auto& e : g.edges()) b.add_edge(e.u, e.v, e.w * 0.1 + 0.3);
  b.set_label(3, "three");
  auto weighted = std::move(b).build();
  std::ostringstream out;
  save_edge_list(weighted, out);
  auto back = parse(out.str()).graph;
  EXPECT_EQ(back.edges(), weighted.edges());
  EXPECT_EQ(back.labels(), weighted.labels());
  std::ostringstream again;
  save_edge_list(back, again);
  EXPECT_EQ(again.str(), out.str());
}

TEST(GraphCore, DegreesSumToTwiceEdges) {
  auto g = generate_synthetic(1000, 7.5, 3);
  std::size_t total = 0;
  for (NodeId v = 0; v < g.node_count(); ++v) total += g.degree(v);
  EXPECT_EQ(total, 2 * g.edge_count());
}

TEST(GraphCore, StarAndIsolatedNode) {
  GraphBuilder b(6);
  for (NodeId leaf = 1; leaf <= 4; ++leaf) b.add_edge(0, leaf);
  auto g = std::move(b).build();
  EXPECT_EQ(g.degree(0), 4u);
  EXPECT_EQ(g.degree(5), 0u);
  EXPECT_THROW(g.degree(6), NotFound);
  EXPECT_EQ(g.edge_weight(3, 0).value(), 1.0);
  EXPECT_FALSE(g.edge_weight(1, 2).has_value());
}

TEST(Generator, ExactEdgeCount) {
  auto g = generate_synthetic(5000, 3, 11);
  EXPECT_EQ(g.node_count(), 5000u);
  EXPECT_EQ(g.edge_count(), 7500u);
}

TEST(Generator, TwoNodesGiveOneEdge) {
  auto g = generate_synthetic(2, 1, 5);
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.edges()[0], (EdgeRef{0, 1, 1.0}));
}

TEST(Generator, DeterministicAndSimple) {
  auto a = generate_synthetic(2000, 12, 99);
  auto b = generate_synthetic(2000, 12, 99);
  EXPECT_EQ(a.edges(), b.edges());
  EXPECT_NE(a.edges(), generate_synthetic(2000, 12, 100).edges());
  for (std::size_t i = 0; i < a.edges().size(); ++i) {
    EXPECT_LT(a.edges()[i].u, a.edges()[i].v);
    if (i) EXPECT_TRUE(a.edges()[i - 1] < a.edges()[i]);
  }
}

TEST(Generator, DenseRequestUsesAllPairs) {
  auto g = generate_synthetic(10, 9, 1);
  EXPECT_EQ(g.edge_count(), 45u);
}

TEST(Generator, InfeasibleRejected) {
  EXPECT_THROW(generate_synthetic(10, 10, 1), std::invalid_argument);
  EXPECT_THROW(generate_synthetic(1, 1, 1), std::invalid_argument);
}

TEST(Generator, PreferentialAttachmentIsSimpleAndConnected) {
  auto g = generate_preferential_attachment(500, 3, 4);
  EXPECT_EQ(g.node_count(), 500u);
  std::vector<bool> seen(500, false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (const auto& nb : g.neighbors(v)) {
      if (!seen[nb.node]) {
        seen[nb.node] = true;
        ++reached;
        stack.push_back(nb.node);
      }
    }
  }
  EXPECT_EQ(reached, 500u);
  std::size_t max_degree = 0;
  for (NodeId v = 0; v < 500; ++v) max_degree = std::max(max_degree, g.degree(v));
  EXPECT_GT(max_degree, 20u);
}
