// provex: provenance-graph feature extraction and decision-tree surrogates.
//
//   provex synth    --template dropper-chain --count 50 --seed 7 --out corpus/
//   provex features --in corpus/ --out features.csv
//   provex train    --corpus corpus/ --strategy trustee --out tree.json --dot tree.dot
//   provex eval     --corpus corpus/ --out-csv report.csv --out-md report.md
//   provex ablate   --corpus corpus/ --out-csv ablation.csv --out-md ablation.md
//   provex explain  --graph g.json --tree tree.json
//   provex predict  --corpus corpus/ --out predictions.jsonl
//
// Exit codes: 0 ok, 1 usage, 2 data, 3 oracle.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "provex/provex.hpp"

namespace fs = std::filesystem;
using namespace provex;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned jobs = default_jobs();

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("PROVEX_SEED")) {
      std::uint64_t v = 0;
      const std::string_view s(env);
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw UsageError("PROVEX_SEED is not an unsigned integer");
      return v;
    }
    return 0;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master RNG seed (falls back to $PROVEX_SEED, then 0)");
  cmd->add_option("--jobs", c.jobs, "Worker threads (default: available parallelism)")->check(CLI::PositiveNumber);
}

struct TreeFlags {
  int max_depth = DTParams{}.max_depth;
  std::size_t min_samples_leaf = DTParams{}.min_samples_leaf;
  double min_impurity_decrease = DTParams{}.min_impurity_decrease;
  bool unweighted = false;
  int outer = TrusteeParams{}.outer_iters;
  int inner = TrusteeParams{}.inner_iters;
  double sample_fraction = TrusteeParams{}.sample_fraction;

  SurrogateConfig config(std::uint64_t seed, unsigned jobs) const {
    SurrogateConfig c;
    c.dt_params.max_depth = max_depth;
    c.dt_params.min_samples_leaf = min_samples_leaf;
    c.dt_params.min_impurity_decrease = min_impurity_decrease;
    c.dt_params.class_weighting = unweighted ? ClassWeighting::None : ClassWeighting::Balanced;
    c.dt_params.rng_seed = seed;
    c.trustee.outer_iters = outer;
    c.trustee.inner_iters = inner;
    c.trustee.sample_fraction = sample_fraction;
    c.trustee.rng_seed = seed;
    c.trustee.jobs = jobs;
    return c;
  }
};

void add_tree_flags(CLI::App* cmd, TreeFlags& t) {
  cmd->add_option("--max-depth", t.max_depth, "Tree depth cap")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--min-samples-leaf", t.min_samples_leaf, "Minimum rows per leaf")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-impurity-decrease", t.min_impurity_decrease, "Weighted Gini decrease needed to split")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--unweighted", t.unweighted, "Disable balanced class weights");
  cmd->add_option("--outer", t.outer, "Trustee outer iterations")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--inner", t.inner, "Trustee inner iterations")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--sample-fraction", t.sample_fraction, "Trustee starting subsample")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
}

// "builtin", "file:<predictions.jsonl>" or "cmd:<shell command>".
std::unique_ptr<Oracle> make_oracle(const std::string& spec, const LoadedCorpus& corpus, std::uint64_t seed,
                                    unsigned jobs) {
  if (spec == "builtin") {
    std::vector<std::string> splits;
    for (const auto& m : corpus.manifest) splits.push_back(m.split);
    EnsembleParams p;
    p.seed = seed;
    p.jobs = jobs;
    return std::make_unique<BuiltinEnsembleOracle>(train_builtin_on_split(corpus.graphs, splits, p));
  }
  if (spec.starts_with("file:")) return std::make_unique<PredictionFileOracle>(PredictionFileOracle::load(spec.substr(5)));
  if (spec.starts_with("cmd:")) return std::make_unique<SubprocessOracle>(spec.substr(4));
  throw UsageError("oracle must be 'builtin', 'file:<path>' or 'cmd:<command>', got '" + spec + "'");
}

void write_out(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  write_text_file(path, text);
}

std::vector<FeatureVector> corpus_features(const LoadedCorpus& corpus, unsigned jobs) {
  auto fv = extract_all(corpus.graphs, jobs);
  return fv;
}

int run_synth(const Common& c, const std::string& tmpl, const std::string& preset, std::size_t count, double scale,
              const std::string& out) {
  const std::uint64_t seed = c.resolved_seed();
  std::vector<CorpusEntry> corpus;
  if (!tmpl.empty() && !preset.empty()) throw UsageError("use either --template or --preset");
  if (!tmpl.empty()) {
    corpus = generate(make_template(tmpl), count, seed);
  } else if (preset == "malware") {
    corpus = malware_corpus(seed, scale);
  } else if (preset == "program") {
    corpus = program_corpus(seed, count);
  } else {
    throw UsageError("synth needs --template or --preset malware|program");
  }
  export_corpus(corpus, out);
  std::cerr << "wrote " << corpus.size() << " graphs to " << out << "\n";
  return 0;
}

int run_features(const Common& c, const std::string& in, const std::string& out, bool max_aggregates) {
  std::vector<ProvGraph> graphs;
  if (fs::is_directory(in)) {
    graphs = load_corpus(in).graphs;
  } else {
    graphs.push_back(load_graph(in));
  }
  ExtractOptions opts;
  opts.include_max_aggregates = max_aggregates;
  std::vector<FeatureVector> rows(graphs.size());
  parallel_for(graphs.size(), c.jobs, [&](std::size_t i) { rows[i] = extract(graphs[i], opts); });
  std::ostringstream ss;
  write_feature_csv(ss, rows, rows.empty() ? canonical_feature_names() : rows.front().names);
  write_out(out, ss.str());
  return 0;
}

int run_train(const Common& c, const std::string& corpus_dir, const std::string& strategy_s,
              const std::string& set_s, const std::string& oracle_spec, const TreeFlags& tf, const std::string& split,
              const std::string& out, const std::string& dot) {
  const std::uint64_t seed = c.resolved_seed();
  const Strategy strategy = parse_strategy(strategy_s);
  const FeatureSetId set = parse_feature_set(set_s);
  if (split != "all" && split != "train" && split != "test") throw UsageError("--split must be all, train or test");
  const LoadedCorpus corpus = load_corpus(corpus_dir);

  std::vector<FeatureVector> rows;
  std::vector<std::string> truth, oracle_labels;
  const auto features = corpus_features(corpus, c.jobs);
  std::vector<std::string> all_oracle;
  if (strategy != Strategy::AccuracyDT) {
    auto oracle = make_oracle(oracle_spec, corpus, seed, c.jobs);
    all_oracle = labels_of(oracle->query(corpus.graphs));
  }
  const auto labels = corpus.labels();
  for (std::size_t i = 0; i < corpus.graphs.size(); ++i) {
    const std::string& s = corpus.manifest[i].split.empty() ? split_for(corpus.graphs[i].graph_id())
                                                            : corpus.manifest[i].split;
    if (split != "all" && s != split) continue;
    rows.push_back(features[i]);
    truth.push_back(labels[i]);
    oracle_labels.push_back(all_oracle.empty() ? labels[i] : all_oracle[i]);
  }
  if (rows.empty()) throw DataError("no graphs selected for training");
  const auto names = feature_set_names(set);
  const auto ds = make_feature_set(rows, truth, LabelSource::Truth, names);
  const auto df = make_feature_set(rows, oracle_labels, LabelSource::Oracle, names);
  const DecisionTree tree = train_surrogate(strategy, ds, df, tf.config(seed, c.jobs));
  write_out(out, tree_to_json(tree));
  if (!dot.empty()) write_text_file(dot, export_dot(tree));
  std::cerr << to_string(strategy) << " tree: " << tree.node_count() << " nodes, depth " << tree.depth();
  if (strategy != Strategy::AccuracyDT) std::cerr << ", training fidelity " << fidelity(tree, df);
  std::cerr << "\n";
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

int run_eval(const Common& c, bool ablate, const std::string& corpus_dir, const std::string& oracle_spec,
             const std::string& strategies_s, const std::string& sets_s, std::size_t k, const TreeFlags& tf,
             const std::string& out_csv, const std::string& out_md) {
  const std::uint64_t seed = c.resolved_seed();
  EvalConfig cfg;
  cfg.k = k;
  cfg.seed = seed;
  cfg.jobs = c.jobs;
  cfg.surrogate = tf.config(seed, 1);
  cfg.strategies.clear();
  for (const auto& s : split_list(strategies_s)) cfg.strategies.push_back(parse_strategy(s));
  cfg.feature_sets.clear();
  if (!ablate)
    for (const auto& s : split_list(sets_s)) cfg.feature_sets.push_back(parse_feature_set(s));
  if (cfg.strategies.empty()) throw UsageError("no strategies given");
  if (!ablate && cfg.feature_sets.empty()) throw UsageError("no feature sets given");

  const LoadedCorpus corpus = load_corpus(corpus_dir);
  auto oracle = make_oracle(oracle_spec, corpus, seed, c.jobs);
  const EvalReport report = ablate ? ablation_grid(corpus.graphs, *oracle, cfg) : kfold_eval(corpus.graphs, *oracle, cfg);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::ostringstream csv_text;
  write_report_csv(csv_text, report);
  if (!out_csv.empty()) write_out(out_csv, csv_text.str());
  const std::string md = report_markdown(report);
  if (!out_md.empty()) write_out(out_md, md);
  if (out_csv.empty() && out_md.empty()) std::cout << md;
  return 0;
}

int run_explain(const std::string& graph_path, const std::string& tree_path) {
  const ProvGraph g = load_graph(graph_path);
  const DecisionTree tree = tree_from_json(read_text_file(tree_path));
  std::cout << explain(tree, extract(g, ExtractOptions{.include_max_aggregates = true}));
  return 0;
}

int run_predict(const Common& c, const std::string& corpus_dir, const std::string& oracle_spec, const std::string& out) {
  const LoadedCorpus corpus = load_corpus(corpus_dir);
  auto oracle = make_oracle(oracle_spec, corpus, c.resolved_seed(), c.jobs);
  std::string text;
  for (const auto& p : oracle->query(corpus.graphs)) text += prediction_to_json_line(p) + "\n";
  write_out(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"provex: provenance graph features and decision-tree surrogates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "provex feature layout " + std::to_string(kFeatureLayoutVersion));

  Common common;
  TreeFlags tree_flags;

  std::string tmpl, preset, out;
  std::size_t count = 100;
  double scale = 1.0;
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  add_common(synth, common);
  synth->add_option("--template", tmpl, "Template name")->check(CLI::IsMember(template_names()));
  synth->add_option("--preset", preset, "Whole corpus preset")->check(CLI::IsMember({"malware", "program"}));
  synth->add_option("--count", count, "Graphs per template (program preset: per class)")->capture_default_str();
  synth->add_option("--scale", scale, "Malware preset size multiplier")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--out", out, "Output directory")->required();

  std::string in;
  bool max_aggregates = false;
  auto* features = app.add_subcommand("features", "Write the feature matrix CSV for a corpus or graph");
  add_common(features, common);
  features->add_option("--in", in, "Corpus directory or single graph file")->required();
  features->add_option("--out", out, "Output CSV ('-' for stdout)")->required();
  features->add_flag("--max-aggregates", max_aggregates, "Also emit per-kind max aggregates");

  std::string corpus_dir, strategy = "fidelity", feature_set = "all", oracle_spec = "builtin", split = "all", dot;
  auto* train = app.add_subcommand("train", "Train one surrogate tree");
  add_common(train, common);
  add_tree_flags(train, tree_flags);
  train->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  train->add_option("--strategy", strategy, "accuracy | fidelity | trustee")->capture_default_str();
  train->add_option("--feature-set", feature_set,
                    "structural | type-differentiated | dropper | clone | probe | ip-locality | all-security | all")
      ->capture_default_str();
  train->add_option("--oracle", oracle_spec, "builtin | file:<path> | cmd:<command>")->capture_default_str();
  train->add_option("--split", split, "Rows to train on: all | train | test")->capture_default_str();
  train->add_option("--out", out, "Tree JSON ('-' for stdout)")->required();
  train->add_option("--dot", dot, "Also write a Graphviz rendering");

  std::string strategies = "accuracy,fidelity,trustee", sets = "all", out_csv, out_md;
  std::size_t k = 10;
  auto* eval = app.add_subcommand("eval", "Stratified k-fold evaluation");
  auto* ablate = app.add_subcommand("ablate", "k-fold evaluation over every feature set");
  for (auto* cmd : {eval, ablate}) {
    add_common(cmd, common);
    add_tree_flags(cmd, tree_flags);
    cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    cmd->add_option("--oracle", oracle_spec, "builtin | file:<path> | cmd:<command>")->capture_default_str();
    cmd->add_option("--strategies", strategies, "Comma-separated strategies")->capture_default_str();
    cmd->add_option("--k", k, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000));
    cmd->add_option("--out-csv", out_csv, "Per-fold CSV report");
    cmd->add_option("--out-md", out_md, "Markdown summary");
  }
  eval->add_option("--feature-sets", sets, "Comma-separated feature sets")->capture_default_str();

  std::string graph_path, tree_path;
  auto* explain_cmd = app.add_subcommand("explain", "Print a graph's decision path with feature glosses");
  explain_cmd->add_option("--graph", graph_path, "Graph JSON file")->required();
  explain_cmd->add_option("--tree", tree_path, "Tree JSON file")->required();

  auto* predict = app.add_subcommand("predict", "Write oracle predictions as JSON lines");
  add_common(predict, common);
  predict->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  predict->add_option("--oracle", oracle_spec, "builtin | file:<path> | cmd:<command>")->capture_default_str();
  predict->add_option("--out", out, "Output file ('-' for stdout)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) return run_synth(common, tmpl, preset, count, scale, out);
    if (*features) return run_features(common, in, out, max_aggregates);
    if (*train) return run_train(common, corpus_dir, strategy, feature_set, oracle_spec, tree_flags, split, out, dot);
    if (*eval) return run_eval(common, false, corpus_dir, oracle_spec, strategies, sets, k, tree_flags, out_csv, out_md);
    if (*ablate) return run_eval(common, true, corpus_dir, oracle_spec, strategies, sets, k, tree_flags, out_csv, out_md);
    if (*explain_cmd) return run_explain(graph_path, tree_path);
    if (*predict) return run_predict(common, corpus_dir, oracle_spec, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const OracleError& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
