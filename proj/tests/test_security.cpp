#include <gtest/gtest.h>

#include "brute.hpp"
#include "fixtures.hpp"
#include "provex/security.hpp"
#include "provex/synth.hpp"

using namespace provex;

TEST(Motifs, Fixtures) {
  const auto d = motif_counts(fixtures::dropper());
  EXPECT_EQ(d.dropper_triangles, 1u);
  EXPECT_EQ(d.clone_triangles, 0u);  // parent wrote but never executed
  EXPECT_EQ(d.probe_triangles, 0u);
  EXPECT_EQ(count_clone_triangles(fixtures::clone()), 1u);
  EXPECT_EQ(count_probe_triangles(fixtures::probe()), 1u);
  const auto f = motif_counts(fixtures::flower());
  EXPECT_EQ(f.dropper_triangles + f.clone_triangles + f.probe_triangles, 0u);
}

TEST(Motifs, ReadAfterForkByChildOnlyIsNotProbe) {
  GraphBuilder b("x");
  const auto p = b.process("P");
  const auto c = b.process("C");
  const auto f = b.file("F");
  b.fork(p, c).read(c, f).exec(c, f);
  EXPECT_EQ(count_probe_triangles(b.build()), 0u);
}

TEST(Motifs, DuplicateEventsDoNotInflate) {
  GraphBuilder b("dup");
  const auto p = b.process("P");
  const auto f = b.file("F");
  const auto c = b.process("C");
  b.write(p, f).write(p, f).fork(p, c).fork(p, c).exec(f, c).exec(c, f);
  EXPECT_EQ(count_dropper_triangles(b.build()), 1u);
}

TEST(Motifs, WriteAndReadTripleCountsForBoth) {
  GraphBuilder b("both");
  const auto p = b.process("P");
  const auto f = b.file("F");
  const auto c = b.process("C");
  b.write(p, f).read(p, f).fork(p, c).exec(c, f);
  const auto m = motif_counts(b.build());
  EXPECT_EQ(m.dropper_triangles, 1u);
  EXPECT_EQ(m.probe_triangles, 1u);
}

TEST(Motifs, OracleEquivalence) {
  Rng rng(404);
  for (int i = 0; i < 200; ++i) {
    const ProvGraph g = brute::random_prov_graph(rng, 15, 45);
    const auto m = motif_counts(g);
    const auto o = brute::motifs(g);
    EXPECT_EQ(m.dropper_triangles, o.dropper) << i;
    EXPECT_EQ(m.clone_triangles, o.clone) << i;
    EXPECT_EQ(m.probe_triangles, o.probe) << i;
  }
}

TEST(Motifs, MonotoneUnderEdgeAddition) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const ProvGraph g = brute::random_prov_graph(rng, 10, 30);
    GraphBuilder b(g.graph_id());
    for (const auto& n : g.nodes()) b.add_node(n.id, n.kind, n.attrs);
    auto prev = motif_counts(b.build());
    for (const auto& e : g.edges()) {
      b.edge(e.src, e.dst, e.op);
      const auto cur = motif_counts(b.build());
      EXPECT_GE(cur.dropper_triangles, prev.dropper_triangles);
      EXPECT_GE(cur.clone_triangles, prev.clone_triangles);
      EXPECT_GE(cur.probe_triangles, prev.probe_triangles);
      prev = cur;
    }
  }
}

TEST(Locality, ClassifyIp) {
  EXPECT_EQ(classify_ip("192.168.1.5"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("10.1.2.3"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("172.16.0.1"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("172.31.255.255"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("172.32.0.1"), SocketLocality::External);
  EXPECT_EQ(classify_ip("127.0.0.1"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("169.254.9.9"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("8.8.8.8"), SocketLocality::External);
  EXPECT_EQ(classify_ip("[::1]"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("fe80::1"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("fd00::7"), SocketLocality::Internal);
  EXPECT_EQ(classify_ip("[2001:db8::1]"), SocketLocality::External);
  EXPECT_EQ(classify_ip("example.com"), SocketLocality::Unknown);
  EXPECT_EQ(classify_ip(""), SocketLocality::Unknown);
  EXPECT_EQ(classify_ip("256.1.1.1"), SocketLocality::Unknown);
}

TEST(Locality, MissingIpIsUnknownAndExcluded) {
  GraphBuilder b("s");
  const auto p = b.process("p");
  const auto s = b.socket("s");
  b.send(p, s);
  EXPECT_EQ(classify_socket(b.build().nodes()[s]), SocketLocality::Unknown);
  const auto m = socket_locality_counts(b.build());
  EXPECT_EQ(m, MotifCounts{});
}

TEST(Locality, CountsByDirection) {
  GraphBuilder b("net");
  const auto p = b.process("p");
  const auto in = b.socket("in", "192.168.0.2");
  const auto out = b.socket("out", "93.184.216.34");
  b.connect(p, out).send(p, out).edge(out, p, EdgeOp::Send).recv(p, out).recv(p, in).send(p, in);
  const auto m = socket_locality_counts(b.build());
  EXPECT_EQ(m.external_socket_writes, 3u);
  EXPECT_EQ(m.external_socket_reads, 1u);
  EXPECT_EQ(m.internal_socket_writes, 1u);
  EXPECT_EQ(m.internal_socket_reads, 1u);
  EXPECT_EQ(m.internal_sockets, 1u);
  EXPECT_EQ(m.external_sockets, 1u);
}

TEST(Locality, NoSocketsAllZeroAndBounded) {
  EXPECT_EQ(socket_locality_counts(fixtures::dropper()), MotifCounts{});
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const ProvGraph g = brute::random_prov_graph(rng, 15, 40);
    std::size_t sockets = 0;
    for (const auto& n : g.nodes()) sockets += n.kind == NodeKind::Socket;
    const auto m = socket_locality_counts(g);
    EXPECT_LE(m.internal_sockets + m.external_sockets, sockets);
  }
}

TEST(Motifs, TemplateConstructedValues) {
  // A chain of length 3 gives exactly 3 dropper triangles.
  auto t = make_template("dropper-chain").force("chain_length", 3);
  EXPECT_EQ(count_dropper_triangles(generate_one(t, "d", 1).graph), 3u);
  // Clone storm with 4 clone rounds and 40 probe rounds.
  auto s = make_template("clone-probe-storm").force("clone_rounds", 4).force("probe_rounds", 40);
  const auto m = motif_counts(generate_one(s, "s", 2).graph);
  EXPECT_EQ(m.clone_triangles, 4u);
  EXPECT_EQ(m.probe_triangles, 40u);
  // Seven flooding children with one send each.
  auto x = make_template("ddos-external").force("children", 7).force("sends", 1);
  EXPECT_EQ(motif_counts(generate_one(x, "x", 3).graph).external_socket_writes, 7u);
  auto in = make_template("ddos-internal");
  const auto mi = motif_counts(generate_one(in, "i", 4).graph);
  EXPECT_EQ(mi.external_socket_writes, 0u);
  EXPECT_GE(mi.internal_socket_writes, 10u);
}
