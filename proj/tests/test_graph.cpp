#include <gtest/gtest.h>

#include <set>

#include "brute.hpp"
#include "fixtures.hpp"
#include "provex/graph.hpp"

using namespace provex;

TEST(Graph, SingleProcessNoEdges) {
  const ProvGraph g = parse_graph(R"({"graph_id":"one","nodes":[{"id":"p","kind":"process"}],"edges":[]})");
  EXPECT_EQ(g.node_count(), 1u);
  EXPECT_EQ(g.edge_count(), 0u);
  EXPECT_FALSE(g.label().has_value());
}

TEST(Graph, OpKindMismatchNamesEdge) {
  const char* doc = R"({"graph_id":"bad","nodes":[{"id":"P","kind":"process"},{"id":"Q","kind":"process"}],
                       "edges":[{"src":"P","dst":"Q","op":"write"}]})";
  try {
    parse_graph(doc);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("op/kind mismatch at edge 0"), std::string::npos) << e.what();
  }
}

TEST(Graph, ValidationErrors) {
  EXPECT_THROW(parse_graph("{not json"), DataError);
  EXPECT_THROW(parse_graph(R"({"graph_id":"x","nodes":[{"id":"a","kind":"process"},{"id":"a","kind":"file"}],"edges":[]})"),
               DataError);
  EXPECT_THROW(parse_graph(R"({"graph_id":"x","nodes":[{"id":"a","kind":"process"}],
                               "edges":[{"src":"a","dst":"zz","op":"read"}]})"),
               DataError);
  EXPECT_THROW(parse_graph(R"({"graph_id":"x","nodes":[{"id":"a","kind":"process"}],
                               "edges":[{"src":"a","dst":"a","op":"fork"}]})"),
               DataError);
  EXPECT_THROW(parse_graph(R"({"graph_id":"x","nodes":[{"id":"a","kind":"daemon"}],"edges":[]})"), DataError);
  EXPECT_THROW(parse_graph(R"({"graph_id":"x","nodes":[{"id":"a","kind":"process"},{"id":"f","kind":"file"}],
                               "edges":[{"src":"a","dst":"f","op":"teleport"}]})"),
               DataError);
  EXPECT_THROW(parse_graph(R"({"nodes":[],"edges":[]})"), DataError);
  // Fork must go process -> process; a file child is rejected.
  EXPECT_THROW(parse_graph(R"({"graph_id":"x","nodes":[{"id":"a","kind":"process"},{"id":"f","kind":"file"}],
                               "edges":[{"src":"a","dst":"f","op":"fork"}]})"),
               DataError);
}

TEST(Graph, EndpointOrderFreeForNonFork) {
  const ProvGraph g = parse_graph(R"({"graph_id":"x","nodes":[{"id":"p","kind":"process"},{"id":"f","kind":"file"},
      {"id":"s","kind":"socket","attrs":{"ip":"8.8.8.8"}}],
      "edges":[{"src":"f","dst":"p","op":"read"},{"src":"s","dst":"p","op":"send"}]})");
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(Graph, SizeCapRejectsInsteadOfTruncating) {
  const ProvGraph g = fixtures::dropper();
  LoadOptions cap;
  cap.max_nodes = 4;
  EXPECT_THROW(parse_graph(serialize_graph(g), cap), DataError);
  cap.max_nodes = 5;
  cap.max_edges = 3;
  EXPECT_THROW(parse_graph(serialize_graph(g), cap), DataError);
  cap.max_edges = 4;
  EXPECT_EQ(parse_graph(serialize_graph(g), cap), g);
}

TEST(Graph, DropperFixtureShape) {
  const ProvGraph g = fixtures::dropper();
  EXPECT_EQ(g.node_count(), 5u);
  EXPECT_EQ(g.edge_count(), 4u);
}

TEST(Orientation, Table) {
  EXPECT_EQ(orient(EdgeOp::Read, 0, NodeKind::Process, 1), (Arc{1, 0, EdgeOp::Read}));
  EXPECT_EQ(orient(EdgeOp::Read, 1, NodeKind::File, 0), (Arc{1, 0, EdgeOp::Read}));
  EXPECT_EQ(orient(EdgeOp::Write, 0, NodeKind::Process, 1), (Arc{0, 1, EdgeOp::Write}));
  EXPECT_EQ(orient(EdgeOp::Write, 1, NodeKind::File, 0), (Arc{0, 1, EdgeOp::Write}));
  EXPECT_EQ(orient(EdgeOp::Exec, 0, NodeKind::Process, 1), (Arc{1, 0, EdgeOp::Exec}));
  EXPECT_EQ(orient(EdgeOp::Fork, 0, NodeKind::Process, 1), (Arc{0, 1, EdgeOp::Fork}));
  EXPECT_EQ(orient(EdgeOp::Send, 0, NodeKind::Process, 1), (Arc{0, 1, EdgeOp::Send}));
  EXPECT_EQ(orient(EdgeOp::Connect, 1, NodeKind::Socket, 0), (Arc{0, 1, EdgeOp::Connect}));
  EXPECT_EQ(orient(EdgeOp::Recv, 0, NodeKind::Process, 1), (Arc{1, 0, EdgeOp::Recv}));
}

TEST(Orientation, ReadOnlyFileIsSourceOnly) {
  GraphBuilder b("r");
  const auto p = b.process("p");
  const auto f = b.file("f");
  b.read(p, f);
  const auto adj = orient_edges(b.build());
  EXPECT_TRUE(adj.in(f).empty());
  ASSERT_EQ(adj.out(f).size(), 1u);
  EXPECT_EQ(adj.out(f)[0], p);
}

TEST(Orientation, PureAndCountPreserving) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const ProvGraph g = brute::random_prov_graph(rng, 10, 25);
    const auto a = orient_edges(g);
    EXPECT_EQ(a, orient_edges(g));
    EXPECT_EQ(a.arcs().size(), g.edge_count());
    EXPECT_LE(undirected_projection(g).edge_count(), g.edge_count());
  }
}

TEST(Undirected, CollapsesReadWritePair) {
  GraphBuilder b("rw");
  const auto p = b.process("p");
  const auto f = b.file("f");
  b.read(p, f).write(p, f);
  const auto u = undirected_projection(b.build());
  EXPECT_EQ(u.edge_count(), 1u);
  EXPECT_TRUE(u.adjacent(p, f));
}

TEST(Undirected, K3AndEmpty) {
  EXPECT_EQ(undirected_projection(fixtures::k3()).edge_count(), 3u);
  const auto empty = undirected_projection(ProvGraph("e", std::nullopt, {}, {}));
  EXPECT_EQ(empty.node_count(), 0u);
  EXPECT_EQ(empty.edge_count(), 0u);
}

TEST(GraphJson, RoundTripPreservesOrderAndMultiset) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    ProvGraph g = brute::random_prov_graph(rng, 12, 30, "rt" + std::to_string(i));
    if (i % 3 == 0) g = g.with_label("malicious");
    const ProvGraph back = parse_graph(serialize_graph(g));
    EXPECT_EQ(back, g);
    EXPECT_EQ(serialize_graph(back), serialize_graph(g));
  }
}

TEST(GraphJson, TimestampsAndAttrsSurvive) {
  GraphBuilder b("ts");
  const auto p = b.process("p", "/bin/sh");
  const auto s = b.socket("s", "[::1]", "53");
  b.edge(p, s, EdgeOp::Connect, 1234567890123LL);
  b.label("benign");
  const ProvGraph g = b.build();
  const ProvGraph back = parse_graph(to_json(g).dump(2));
  ASSERT_EQ(back.edges().size(), 1u);
  EXPECT_EQ(back.edges()[0].ts, std::optional<std::int64_t>(1234567890123LL));
  EXPECT_EQ(*back.nodes()[1].attr("ip"), "[::1]");
  EXPECT_EQ(back.label(), std::optional<std::string>("benign"));
}

TEST(GraphJson, FileRoundTrip) {
  const auto dir = std::filesystem::path(PROVEX_TEST_TMP) / "graph_io";
  std::filesystem::create_directories(dir);
  const ProvGraph g = fixtures::dropper();
  save_graph(g, dir / "d.json");
  EXPECT_EQ(load_graph(dir / "d.json"), g);
  EXPECT_THROW(load_graph(dir / "missing.json"), DataError);
}
