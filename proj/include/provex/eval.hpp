#pragma once

// Stratified k-fold evaluation of surrogate strategies over feature groups,
// the ablation grid, and CSV / Markdown report rendering.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "provex/csv.hpp"
#include "provex/features.hpp"
#include "provex/oracle.hpp"
#include "provex/parallel.hpp"
#include "provex/rng.hpp"
#include "provex/surrogate.hpp"
#include "provex/synth.hpp"

namespace provex {

struct EvalConfig {
  std::vector<Strategy> strategies = {Strategy::AccuracyDT, Strategy::FidelityDT, Strategy::TrusteeDT};
  std::vector<FeatureSetId> feature_sets = {FeatureSetId::All};
  std::size_t k = 10;
  std::uint64_t seed = 0;
  SurrogateConfig surrogate;
  std::size_t top_k = 3;
  unsigned jobs = 1;
};

struct FoldResult {
  Strategy strategy = Strategy::FidelityDT;
  FeatureSetId feature_set = FeatureSetId::All;
  std::size_t fold = 0;
  double f1_truth = 0.0;
  double fidelity = 0.0;
  double f1_vs_oracle = 0.0;
  std::size_t n_tree_nodes = 0;
  std::vector<std::string> top_features;

  bool operator==(const FoldResult&) const = default;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample standard deviation (n-1); 0 for a single value.
inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

struct CellSummary {
  Strategy strategy = Strategy::FidelityDT;
  FeatureSetId feature_set = FeatureSetId::All;
  std::size_t folds = 0;
  MeanStd f1_truth, fidelity, f1_vs_oracle, tree_nodes;
  // Mean pairwise Jaccard overlap of the per-fold top-k feature sets.
  double top_feature_stability = 0.0;
  // Features most often in a fold's top-k, most frequent first.
  std::vector<std::string> top_features;
  std::string representative_path;
};

struct EvalReport {
  std::size_t k = 0;
  std::vector<FoldResult> folds;
  std::vector<CellSummary> cells;
  std::vector<std::string> warnings;

  const CellSummary* cell(Strategy s, FeatureSetId f) const {
    for (const auto& c : cells)
      if (c.strategy == s && c.feature_set == f) return &c;
    return nullptr;
  }
};

// Fold index per row. Each class is shuffled on its own and dealt round-robin,
// continuing where the previous class stopped so small classes spread out.
inline std::vector<std::size_t> stratified_folds(std::span<const std::string> labels, std::size_t k,
                                                 std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  if (k < 2) throw UsageError("k-fold needs k >= 2");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t dealt = 0;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < k && warnings)
      warnings->push_back("class '" + label + "' has " + std::to_string(idx.size()) + " members, fewer than k=" +
                          std::to_string(k) + "; some folds will not test it");
    Rng rng(derive_seed(seed, fnv1a64(label)));
    rng.shuffle(std::span(idx));
    for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = (dealt + j) % k;
    dealt += idx.size();
  }
  return fold;
}

namespace detail {

inline std::string render_path(const DecisionTree& t, const FeatureVector& x) {
  std::ostringstream ss;
  ss << x.graph_id << ": ";
  const auto path = t.decision_path(x);
  for (const auto& step : path) {
    ss << step.feature << (step.direction == Direction::LessEqual ? " <= " : " > ") << format_threshold(step.threshold)
       << " -> ";
  }
  ss << t.predict(x);
  return ss.str();
}

inline std::vector<std::string> most_frequent(const std::vector<std::vector<std::string>>& sets, std::size_t k) {
  std::map<std::string, std::size_t> freq;
  for (const auto& s : sets)
    for (const auto& f : s) ++freq[f];
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < items.size() && i < k; ++i) out.push_back(items[i].first);
  return out;
}

}  // namespace detail

// Recomputes every cell summary from report.folds.
inline void summarize(EvalReport& report, std::size_t top_k = 3) {
  std::vector<CellSummary> cells;
  for (const auto& f : report.folds) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellSummary& c) {
      return c.strategy == f.strategy && c.feature_set == f.feature_set;
    });
    if (it == cells.end()) {
      CellSummary c;
      c.strategy = f.strategy;
      c.feature_set = f.feature_set;
      if (const CellSummary* old = report.cell(f.strategy, f.feature_set)) c.representative_path = old->representative_path;
      cells.push_back(std::move(c));
    }
  }
  for (auto& c : cells) {
    std::vector<double> f1, fid, f1o, nodes;
    std::vector<std::vector<std::string>> tops;
    for (const auto& f : report.folds) {
      if (f.strategy != c.strategy || f.feature_set != c.feature_set) continue;
      f1.push_back(f.f1_truth);
      fid.push_back(f.fidelity);
      f1o.push_back(f.f1_vs_oracle);
      nodes.push_back(static_cast<double>(f.n_tree_nodes));
      tops.push_back(f.top_features);
    }
    c.folds = f1.size();
    c.f1_truth = mean_std(f1);
    c.fidelity = mean_std(fid);
    c.f1_vs_oracle = mean_std(f1o);
    c.tree_nodes = mean_std(nodes);
    c.top_feature_stability = mean_pairwise_jaccard(tops);
    c.top_features = detail::most_frequent(tops, top_k);
  }
  report.cells = std::move(cells);
}

// Core evaluation over precomputed canonical feature vectors. Oracle labels
// are only used to train fidelity-oriented strategies on the training folds
// and to score agreement on the test fold.
inline EvalReport kfold_eval(std::span<const FeatureVector> features, std::span<const std::string> truth,
                             std::span<const std::string> oracle_labels, const EvalConfig& cfg) {
  if (features.size() != truth.size() || features.size() != oracle_labels.size())
    throw UsageError("kfold_eval: features, truth and oracle labels must align");
  if (features.empty()) throw UsageError("kfold_eval: empty corpus");
  EvalReport report;
  report.k = cfg.k;
  const auto fold_of = stratified_folds(truth, cfg.k, cfg.seed, &report.warnings);

  struct Task {
    std::size_t fold;
    Strategy strategy;
    FeatureSetId set;
  };
  std::vector<Task> tasks;
  for (std::size_t f = 0; f < cfg.k; ++f)
    for (FeatureSetId set : cfg.feature_sets)
      for (Strategy s : cfg.strategies) tasks.push_back({f, s, set});

  std::vector<std::optional<FoldResult>> results(tasks.size());
  std::vector<std::string> paths(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t ti) {
    const Task& task = tasks[ti];
    std::vector<FeatureVector> train_x, test_x;
    std::vector<std::string> train_y, train_y_oracle, test_y, test_y_oracle;
    for (std::size_t i = 0; i < features.size(); ++i) {
      const bool test = fold_of[i] == task.fold;
      (test ? test_x : train_x).push_back(features[i]);
      (test ? test_y : train_y).push_back(truth[i]);
      (test ? test_y_oracle : train_y_oracle).push_back(oracle_labels[i]);
    }
    if (test_x.empty() || train_x.empty()) return;
    const auto names = feature_set_names(task.set);
    const auto ds = make_feature_set(train_x, train_y, LabelSource::Truth, names);
    const auto df = make_feature_set(train_x, train_y_oracle, LabelSource::Oracle, names);
    SurrogateConfig sc = cfg.surrogate;
    sc.trustee.jobs = 1;
    sc.trustee.rng_seed = derive_seed(cfg.seed, task.fold);
    const DecisionTree tree = train_surrogate(task.strategy, ds, df, sc);

    const auto test_oracle = make_feature_set(test_x, test_y_oracle, LabelSource::Oracle, names);
    const auto pred = predict_all(tree, test_oracle);
    FoldResult r;
    r.strategy = task.strategy;
    r.feature_set = task.set;
    r.fold = task.fold;
    r.f1_truth = macro_f1(pred, test_y);
    r.fidelity = agreement(pred, test_y_oracle);
    r.f1_vs_oracle = macro_f1(pred, test_y_oracle);
    r.n_tree_nodes = tree.node_count();
    r.top_features = tree.top_features(cfg.top_k);
    results[ti] = std::move(r);

    // Representative path: first test graph the oracle puts in its minority
    // class (the "interesting" one), else the first test graph.
    std::map<std::string, std::size_t> freq;
    for (const auto& l : oracle_labels) ++freq[l];
    std::size_t pick = 0;
    std::string majority;
    std::size_t best = 0;
    for (const auto& [l, c] : freq)
      if (c > best) best = c, majority = l;
    for (std::size_t i = 0; i < test_x.size(); ++i)
      if (test_y_oracle[i] != majority) {
        pick = i;
        break;
      }
    paths[ti] = detail::render_path(tree, project(test_x[pick], names));
  });

  for (std::size_t ti = 0; ti < tasks.size(); ++ti)
    if (results[ti]) report.folds.push_back(std::move(*results[ti]));
  summarize(report, cfg.top_k);
  for (auto& c : report.cells) {
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      if (results[ti] && tasks[ti].strategy == c.strategy && tasks[ti].set == c.feature_set) {
        c.representative_path = paths[ti];
        break;
      }
    }
  }
  return report;
}

inline std::vector<FeatureVector> extract_all(std::span<const ProvGraph> graphs, unsigned jobs = 1) {
  std::vector<FeatureVector> out(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t i) { out[i] = extract(graphs[i]); });
  return out;
}

inline std::vector<std::string> labels_of(std::span<const Prediction> preds) {
  std::vector<std::string> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(p.label);
  return out;
}

// Extracts features, queries the oracle once for the whole corpus (it is
// fixed, so this equals per-fold querying) and evaluates.
inline EvalReport kfold_eval(std::span<const ProvGraph> graphs, const Oracle& oracle, const EvalConfig& cfg) {
  std::vector<std::string> truth;
  for (const auto& g : graphs) {
    if (!g.label()) throw DataError("graph '" + g.graph_id() + "' has no label");
    truth.push_back(*g.label());
  }
  const auto features = extract_all(graphs, cfg.jobs);
  const auto preds = oracle.query(graphs);
  if (preds.size() != graphs.size()) throw OracleError("oracle returned the wrong number of predictions");
  return kfold_eval(features, truth, labels_of(preds), cfg);
}

// The built-in oracle learns from the train split only. `splits` aligns with
// `graphs`; when empty the id-hash split is used.
inline BuiltinEnsembleOracle train_builtin_on_split(std::span<const ProvGraph> graphs,
                                                    std::span<const std::string> splits, const EnsembleParams& params) {
  if (!splits.empty() && splits.size() != graphs.size()) throw UsageError("split column does not align with graphs");
  std::vector<ProvGraph> train;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const std::string split = splits.empty() || splits[i].empty() ? split_for(graphs[i].graph_id()) : splits[i];
    if (split != "train") continue;
    if (!graphs[i].label()) throw DataError("graph '" + graphs[i].graph_id() + "' has no label");
    train.push_back(graphs[i]);
    labels.push_back(*graphs[i].label());
  }
  if (train.empty()) throw DataError("corpus has no training-split graphs for the built-in oracle");
  return train_builtin(train, labels, params);
}

// kfold_eval over every feature group.
inline EvalReport ablation_grid(std::span<const FeatureVector> features, std::span<const std::string> truth,
                                std::span<const std::string> oracle_labels, EvalConfig cfg) {
  cfg.feature_sets.assign(std::begin(kAllFeatureSets), std::end(kAllFeatureSets));
  return kfold_eval(features, truth, oracle_labels, cfg);
}

inline EvalReport ablation_grid(std::span<const ProvGraph> graphs, const Oracle& oracle, EvalConfig cfg) {
  cfg.feature_sets.assign(std::begin(kAllFeatureSets), std::end(kAllFeatureSets));
  return kfold_eval(graphs, oracle, cfg);
}

enum class Metric { F1Truth, Fidelity, F1VsOracle };

inline double cell_mean(const CellSummary& c, Metric m) {
  switch (m) {
    case Metric::F1Truth: return c.f1_truth.mean;
    case Metric::Fidelity: return c.fidelity.mean;
    case Metric::F1VsOracle: return c.f1_vs_oracle.mean;
  }
  return 0.0;
}

// Mean of `set` minus mean of the All column for the same strategy.
inline std::optional<double> ablation_delta(const EvalReport& r, Strategy s, FeatureSetId set, Metric m) {
  const CellSummary* c = r.cell(s, set);
  const CellSummary* all = r.cell(s, FeatureSetId::All);
  if (!c || !all) return std::nullopt;
  return cell_mean(*c, m) - cell_mean(*all, m);
}

// "0.63 (-0.29)"; the All column itself is printed without a delta.
inline std::string format_with_delta(double value, std::optional<double> delta) {
  char buf[64];
  if (!delta) {
    std::snprintf(buf, sizeof buf, "%.2f", value);
  } else {
    const double d = std::abs(*delta) < 0.005 ? 0.0 : *delta;
    std::snprintf(buf, sizeof buf, "%.2f (%+.2f)", value, d);
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Rendering.

inline constexpr const char* kReportCsvHeader =
    "strategy,feature_set,fold,f1_truth,fidelity,f1_vs_oracle,n_tree_nodes,top_features";

inline void write_report_csv(std::ostream& out, const EvalReport& r) {
  out << kReportCsvHeader << '\n';
  for (const auto& f : r.folds) {
    std::string tops;
    for (std::size_t i = 0; i < f.top_features.size(); ++i) tops += (i ? ";" : "") + f.top_features[i];
    out << csv::join({std::string(to_string(f.strategy)), std::string(to_string(f.feature_set)), std::to_string(f.fold),
                      csv::format_double(f.f1_truth), csv::format_double(f.fidelity),
                      csv::format_double(f.f1_vs_oracle), std::to_string(f.n_tree_nodes), tops})
        << '\n';
  }
}

inline std::vector<FoldResult> read_report_csv(std::istream& in) {
  auto rows = csv::read_all(in);
  if (rows.empty() || csv::join(rows.front()) != kReportCsvHeader) throw DataError("not a report CSV");
  std::vector<FoldResult> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 8) throw DataError("report CSV row " + std::to_string(r) + " has wrong width");
    FoldResult f;
    f.strategy = parse_strategy(row[0]);
    f.feature_set = parse_feature_set(row[1]);
    f.fold = static_cast<std::size_t>(std::stoul(row[2]));
    f.f1_truth = csv::parse_double(row[3]);
    f.fidelity = csv::parse_double(row[4]);
    f.f1_vs_oracle = csv::parse_double(row[5]);
    f.n_tree_nodes = static_cast<std::size_t>(std::stoul(row[6]));
    std::stringstream tops(row[7]);
    for (std::string t; std::getline(tops, t, ';');)
      if (!t.empty()) f.top_features.push_back(t);
    out.push_back(std::move(f));
  }
  return out;
}

inline std::string report_markdown(const EvalReport& r) {
  std::ostringstream md;
  auto pm = [](const MeanStd& m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f ± %.3f", m.mean, m.std);
    return std::string(buf);
  };
  md << "# Surrogate evaluation (" << r.k << "-fold)\n\n";
  md << "| Strategy | Feature set | F1 (truth) | Fidelity | F1 (vs oracle) | Tree nodes | Top-3 stability | Top features |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : r.cells) {
    std::string tops;
    for (std::size_t i = 0; i < c.top_features.size(); ++i) tops += (i ? ", " : "") + c.top_features[i];
    char nodes[32], stab[32];
    std::snprintf(nodes, sizeof nodes, "%.1f", c.tree_nodes.mean);
    std::snprintf(stab, sizeof stab, "%.3f", c.top_feature_stability);
    md << "| " << to_string(c.strategy) << " | " << to_string(c.feature_set) << " | " << pm(c.f1_truth) << " | "
       << pm(c.fidelity) << " | " << pm(c.f1_vs_oracle) << " | " << nodes << " | " << stab << " | " << tops << " |\n";
  }

  // Ablation view: one row per (strategy, metric), one column per feature set.
  std::vector<FeatureSetId> sets;
  for (const auto& c : r.cells)
    if (std::find(sets.begin(), sets.end(), c.feature_set) == sets.end()) sets.push_back(c.feature_set);
  const bool has_all = std::find(sets.begin(), sets.end(), FeatureSetId::All) != sets.end();
  if (has_all && sets.size() > 1) {
    md << "\n## Ablation (delta vs. all features)\n\n| Strategy | Metric |";
    for (auto s : sets) md << ' ' << to_string(s) << " |";
    md << "\n|---|---|";
    for (std::size_t i = 0; i < sets.size(); ++i) md << "---|";
    md << '\n';
    std::vector<Strategy> strategies;
    for (const auto& c : r.cells)
      if (std::find(strategies.begin(), strategies.end(), c.strategy) == strategies.end()) strategies.push_back(c.strategy);
    for (Strategy st : strategies) {
      for (auto [metric, name] : {std::pair{Metric::F1Truth, "F1"}, std::pair{Metric::Fidelity, "Fidelity"}}) {
        md << "| " << to_string(st) << " | " << name << " |";
        for (auto s : sets) {
          const CellSummary* c = r.cell(st, s);
          if (!c) {
            md << " - |";
            continue;
          }
          const auto delta = s == FeatureSetId::All ? std::nullopt : ablation_delta(r, st, s, metric);
          md << ' ' << format_with_delta(cell_mean(*c, metric), delta) << " |";
        }
        md << '\n';
      }
    }
  }

  bool any_path = false;
  for (const auto& c : r.cells) any_path = any_path || !c.representative_path.empty();
  if (any_path) {
    md << "\n## Representative decision paths (fold 0)\n\n";
    for (const auto& c : r.cells)
      if (!c.representative_path.empty())
        md << "- **" << to_string(c.strategy) << " / " << to_string(c.feature_set) << "**: `" << c.representative_path
           << "`\n";
  }
  if (!r.warnings.empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& w : r.warnings) md << "- " << w << '\n';
  }
  return md.str();
}

}  // namespace provex
