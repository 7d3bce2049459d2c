#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "provex/graph.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell, capturing stdout; stderr is discarded.
Run cli(const std::string& args) {
  const std::string cmd = std::string(PROVEX_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path tmp(const std::string& name) {
  const fs::path p = fs::path(PROVEX_TEST_TMP) / "cli" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, HelpAndVersion) {
  const auto h = cli("--help");
  EXPECT_EQ(h.code, 0);
  for (const char* sub : {"synth", "features", "train", "eval", "ablate", "explain", "predict"})
    EXPECT_NE(h.out.find(sub), std::string::npos) << sub;
  EXPECT_EQ(cli("--version").code, 0);
  EXPECT_EQ(cli("train --help").code, 0);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("synth --bogus-flag --out x").code, 1);
  EXPECT_EQ(cli("synth --template no-such --out x").code, 1);
  EXPECT_EQ(cli("synth --out " + tmp("neither").string()).code, 1);
}

TEST(Cli, SynthCountContract) {
  const auto dir = tmp("synth_count");
  ASSERT_EQ(cli("synth --template dropper-chain --count 7 --seed 3 --out " + dir.string()).code, 0);
  std::size_t json = 0;
  for (const auto& e : fs::directory_iterator(dir)) json += e.path().extension() == ".json";
  EXPECT_EQ(json, 7u);
  EXPECT_EQ(count_lines(provex::read_text_file(dir / "manifest.csv")), 8u);
}

TEST(Cli, FeaturesAreByteIdenticalAcrossRuns) {
  const auto dir = tmp("feat_corpus");
  ASSERT_EQ(cli("synth --preset malware --scale 0.02 --seed 5 --out " + dir.string()).code, 0);
  const auto a = cli("features --in " + dir.string() + " --out - --jobs 1");
  const auto b = cli("features --in " + dir.string() + " --out - --jobs 2");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("graph_id,label,n_nodes,", 0), 0u) << a.out.substr(0, 80);
  EXPECT_EQ(count_lines(a.out), 1u + 12u);
}

TEST(Cli, DataErrorsExitTwo) {
  EXPECT_EQ(cli("features --in /nonexistent/graph.json --out -").code, 2);
  const auto bad = tmp("bad.json");
  provex::write_text_file(bad, "{\"graph_id\": 3}");
  EXPECT_EQ(cli("features --in " + bad.string() + " --out -").code, 2);
}

TEST(Cli, OracleErrorsExitThree) {
  const auto dir = tmp("oracle_corpus");
  ASSERT_EQ(cli("synth --template benign-flower --count 3 --out " + dir.string()).code, 0);
  EXPECT_EQ(cli("predict --corpus " + dir.string() + " --oracle 'cmd:exit 4' --out -").code, 3);
  const auto preds = tmp("preds.jsonl");
  provex::write_text_file(preds, "{\"graph_id\":\"other\",\"label\":\"benign\"}\n");
  EXPECT_EQ(cli("train --corpus " + dir.string() + " --oracle file:" + preds.string() + " --out -").code, 3);
}

TEST(Cli, PredictThenReuseAsFileOracle) {
  const auto dir = tmp("predict_corpus");
  ASSERT_EQ(cli("synth --preset malware --scale 0.03 --seed 2 --out " + dir.string()).code, 0);
  const auto preds = tmp("builtin.jsonl");
  ASSERT_EQ(cli("predict --corpus " + dir.string() + " --oracle builtin --seed 2 --out " + preds.string()).code, 0);
  EXPECT_EQ(count_lines(provex::read_text_file(preds)), 20u);
  const auto a = cli("train --corpus " + dir.string() + " --oracle builtin --seed 2 --out -");
  const auto b = cli("train --corpus " + dir.string() + " --oracle file:" + preds.string() + " --seed 2 --out -");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, TrainAndExplain) {
  const auto dir = tmp("explain_corpus");
  ASSERT_EQ(cli("synth --preset malware --scale 0.05 --seed 4 --out " + dir.string()).code, 0);
  const auto tree = tmp("tree.json");
  const auto dot = tmp("tree.dot");
  ASSERT_EQ(cli("train --corpus " + dir.string() + " --strategy accuracy --feature-set dropper --out " +
                tree.string() + " --dot " + dot.string())
                .code,
            0);
  EXPECT_EQ(provex::read_text_file(dot).rfind("digraph DecisionTree {", 0), 0u);
  const auto g = tmp("dropper.json");
  provex::save_graph(fixtures::dropper(), g);
  const auto r = cli("explain --graph " + g.string() + " --tree " + tree.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("dropper: ", 0), 0u) << r.out;
  // Compact path first, then one glossed line per rule and the verdict.
  const auto first = r.out.substr(0, r.out.find('\n'));
  const auto verdict = first.substr(first.rfind(' ') + 1);
  EXPECT_NE(r.out.find("\n  => " + verdict + "\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find(" (value "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find(" ["), std::string::npos) << r.out;
}

TEST(Cli, EvalWritesReports) {
  const auto dir = tmp("eval_corpus");
  ASSERT_EQ(cli("synth --preset malware --scale 0.05 --seed 6 --out " + dir.string()).code, 0);
  const auto csv = tmp("report.csv");
  const auto md = tmp("report.md");
  ASSERT_EQ(cli("eval --corpus " + dir.string() + " --k 3 --strategies fidelity,trustee --outer 2 --inner 2 --out-csv " +
                csv.string() + " --out-md " + md.string())
                .code,
            0);
  EXPECT_EQ(count_lines(provex::read_text_file(csv)), 1u + 3u * 2u);
  EXPECT_NE(provex::read_text_file(md).find("| trustee | all |"), std::string::npos);
  EXPECT_EQ(cli("eval --corpus " + dir.string() + " --k 1").code, 1);
  EXPECT_EQ(cli("eval --corpus " + dir.string() + " --strategies random").code, 1);
}
