#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "provex/features.hpp"
#include "provex/synth.hpp"

using namespace provex;

namespace {

void expect_signature(const CorpusEntry& e) {
  const MotifCounts m = motif_counts(e.graph);
  const auto& s = e.expected;
  if (s.dropper) {
    EXPECT_EQ(m.dropper_triangles, *s.dropper) << e.graph.graph_id();
  }
  if (s.clone) {
    EXPECT_EQ(m.clone_triangles, *s.clone) << e.graph.graph_id();
  }
  if (s.probe) {
    EXPECT_EQ(m.probe_triangles, *s.probe) << e.graph.graph_id();
  }
  if (s.external_socket_writes) {
    EXPECT_EQ(m.external_socket_writes, *s.external_socket_writes) << e.graph.graph_id();
  }
}

}  // namespace

TEST(Synth, EveryTemplateKeepsItsSignature) {
  for (const auto& name : template_names()) {
    const auto corpus = generate(make_template(name), 40, 17);
    ASSERT_EQ(corpus.size(), 40u);
    for (const auto& e : corpus) {
      expect_signature(e);
      EXPECT_EQ(e.family, name);
      EXPECT_TRUE(e.expected.dropper && e.expected.clone && e.expected.probe && e.expected.external_socket_writes);
    }
  }
}

TEST(Synth, ForcedParametersLandExactly) {
  auto t = make_template("dropper-chain");
  t.force("chain_length", 4);
  EXPECT_EQ(motif_counts(generate_one(t, "d", 1).graph).dropper_triangles, 4u);
  auto s = make_template("clone-probe-storm");
  s.force("clone_rounds", 2).force("probe_rounds", 25);
  const auto m = motif_counts(generate_one(s, "s", 1).graph);
  EXPECT_EQ(m.clone_triangles, 2u);
  EXPECT_EQ(m.probe_triangles, 25u);
  auto x = make_template("ddos-external");
  x.force("children", 3).force("sends", 2);
  const auto mx = motif_counts(generate_one(x, "x", 1).graph);
  EXPECT_EQ(mx.external_socket_writes, 6u);
  EXPECT_EQ(mx.internal_socket_writes, 0u);
  auto in = make_template("ddos-internal");
  in.force("children", 3).force("sends", 2);
  const auto mi = motif_counts(generate_one(in, "i", 1).graph);
  EXPECT_EQ(mi.internal_socket_writes, 6u);
  EXPECT_EQ(mi.external_socket_writes, 0u);
}

TEST(Synth, BenignTemplatesHaveNoMotifs) {
  for (const char* name : {"benign-flower", "benign-chain", "benign-writer", "benign-pool"}) {
    for (const auto& e : generate(make_template(name), 30, 3)) {
      const auto m = motif_counts(e.graph);
      EXPECT_EQ(m.dropper_triangles + m.clone_triangles + m.probe_triangles, 0u) << e.graph.graph_id();
      EXPECT_EQ(e.graph.label(), "benign");
    }
  }
}

TEST(Synth, MalwareCorpusComposition) {
  const auto corpus = malware_corpus(5);
  ASSERT_EQ(corpus.size(), 600u);
  std::map<std::string, std::size_t> labels;
  std::set<std::string> ids;
  for (const auto& e : corpus) {
    ++labels[*e.graph.label()];
    ids.insert(e.graph.graph_id());
    expect_signature(e);
  }
  EXPECT_EQ(labels["benign"], 300u);
  EXPECT_EQ(labels["malicious"], 300u);
  EXPECT_EQ(ids.size(), 600u);
}

TEST(Synth, ProgramCorpusClasses) {
  const auto corpus = program_corpus(5, 20);
  ASSERT_EQ(corpus.size(), 80u);
  std::map<std::string, std::size_t> labels;
  for (const auto& e : corpus) ++labels[*e.graph.label()];
  EXPECT_EQ(labels.size(), 4u);
  for (const auto& [_, c] : labels) EXPECT_EQ(c, 20u);
}

TEST(Synth, Deterministic) {
  const auto a = generate(make_template("clone-probe-storm"), 10, 99);
  const auto b = generate(make_template("clone-probe-storm"), 10, 99);
  const auto c = generate(make_template("clone-probe-storm"), 10, 100);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(serialize_graph(a[i].graph), serialize_graph(b[i].graph));
    differs = differs || serialize_graph(a[i].graph) != serialize_graph(c[i].graph);
  }
  EXPECT_TRUE(differs);
}

TEST(Synth, Validation) {
  EXPECT_THROW(make_template("no-such-template"), UsageError);
  EXPECT_THROW(generate(make_template("benign-flower"), 0, 1), UsageError);
}

TEST(Synth, ExportReloadPreservesFeatures) {
  const auto corpus = malware_corpus(8, 0.05);
  const std::filesystem::path dir = std::filesystem::path(PROVEX_TEST_TMP) / "synth_export";
  std::filesystem::remove_all(dir);
  const auto manifest = export_corpus(corpus, dir);
  ASSERT_EQ(manifest.size(), corpus.size());
  const auto loaded = load_corpus(dir);
  ASSERT_EQ(loaded.graphs.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(loaded.manifest[i].graph_id, corpus[i].graph.graph_id());
    EXPECT_EQ(loaded.manifest[i].family, corpus[i].family);
    EXPECT_EQ(loaded.manifest[i].split, split_for(corpus[i].graph.graph_id()));
    EXPECT_EQ(extract(loaded.graphs[i]).values, extract(corpus[i].graph).values);
  }
  EXPECT_EQ(loaded.labels().size(), corpus.size());
}

TEST(Synth, SplitIsStableAndMostlyTrain) {
  std::size_t train = 0;
  for (int i = 0; i < 1000; ++i) train += split_for("g" + std::to_string(i)) == "train";
  EXPECT_GT(train, 740u);
  EXPECT_LT(train, 860u);
  EXPECT_EQ(split_for("abc"), split_for("abc"));
}
