// Builds a small dropper graph by hand, extracts its features, trains a
// fidelity surrogate on a synthetic corpus and explains the graph.

#include <iostream>

#include "provex/provex.hpp"

int main() {
  using namespace provex;

  GraphBuilder b("walkthrough");
  const auto parent = b.process("p1", "C:/Users/me/Downloads/invoice.exe");
  const auto payload = b.file("f1", "C:/Users/me/AppData/Local/Temp/svc.exe");
  const auto child = b.process("p2", "C:/Users/me/AppData/Local/Temp/svc.exe");
  const auto c2 = b.socket("s1", "203.0.113.9", "443");
  b.write(parent, payload).fork(parent, child).exec(child, payload).connect(child, c2).send(child, c2);
  const ProvGraph g = b.build();

  const FeatureVector fv = extract(g);
  std::cout << "dropper_triangles = " << fv.at("dropper_triangles")
            << ", external_socket_writes = " << fv.at("external_socket_writes") << "\n";

  const auto corpus = malware_corpus(/*seed=*/11, /*scale=*/0.2);
  std::vector<ProvGraph> graphs;
  for (const auto& e : corpus) graphs.push_back(e.graph);
  const auto oracle = train_builtin_on_split(graphs, {}, EnsembleParams{.seed = 11});
  const auto oracle_labels = labels_of(oracle.query(graphs));

  const auto rows = extract_all(graphs);
  const auto df = make_feature_set(rows, oracle_labels, LabelSource::Oracle, feature_set_names(FeatureSetId::All));
  const DecisionTree tree = train_fidelity_dt(df, DTParams{.max_depth = 3});
  std::cout << "surrogate: " << tree.node_count() << " nodes, fidelity " << fidelity(tree, df) << "\n\n";
  std::cout << explain(tree, fv);
}
