#pragma once

// Decision-tree surrogates of a black-box classifier, trained three ways:
// on true labels, on the black box's labels, and on the black box's labels
// with TRUSTEE-style iterative augmentation. Plus the agreement and F1
// metrics used to judge them.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "provex/dtree.hpp"
#include "provex/error.hpp"
#include "provex/features.hpp"
#include "provex/parallel.hpp"
#include "provex/rng.hpp"

namespace provex {

enum class LabelSource { Truth, Oracle };

struct LabeledFeatureSet {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::vector<std::string> graph_ids;
  LabelSource label_source = LabelSource::Truth;

  std::size_t size() const { return rows.size(); }

  TrainingData training_data() const { return {feature_names, rows, labels}; }
};

// Rows are laid out by `names`, which must exist in every vector.
inline LabeledFeatureSet make_feature_set(std::span<const FeatureVector> vectors, std::span<const std::string> labels,
                                          LabelSource source, const std::vector<std::string>& names) {
  if (vectors.size() != labels.size()) throw UsageError("vector/label count mismatch");
  LabeledFeatureSet ds;
  ds.feature_names = names;
  ds.label_source = source;
  ds.rows.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    ds.rows.push_back(project(vectors[i], names).values);
    ds.labels.emplace_back(labels[i]);
    ds.graph_ids.push_back(vectors[i].graph_id);
  }
  return ds;
}

inline std::vector<std::string> predict_all(const DecisionTree& t, const LabeledFeatureSet& ds) {
  if (t.feature_names() != ds.feature_names) throw UsageError("tree and dataset feature layouts differ");
  std::vector<std::string> out;
  out.reserve(ds.size());
  for (const auto& row : ds.rows) out.push_back(t.predict_row(row));
  return out;
}

// ---------------------------------------------------------------------------
// Metrics.

inline double agreement(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) throw UsageError("label sequences differ in length");
  if (a.empty()) throw UsageError("agreement of empty label sequences");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

// Unweighted mean of per-class F1 over the classes present in either
// sequence. A class never predicted scores 0.
inline double macro_f1(std::span<const std::string> pred, std::span<const std::string> truth) {
  if (pred.size() != truth.size()) throw UsageError("macro_f1: length mismatch");
  if (pred.empty()) throw UsageError("macro_f1: empty input");
  std::map<std::string, std::array<std::size_t, 3>> stats;  // tp, fp, fn
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) {
      ++stats[pred[i]][0];
    } else {
      ++stats[pred[i]][1];
      ++stats[truth[i]][2];
    }
  }
  double sum = 0.0;
  for (const auto& [_, s] : stats) {
    const double denom = static_cast<double>(2 * s[0] + s[1] + s[2]);
    sum += denom > 0.0 ? 2.0 * static_cast<double>(s[0]) / denom : 0.0;
  }
  return sum / static_cast<double>(stats.size());
}

// Fraction of rows where the tree agrees with the black box.
inline double fidelity(const DecisionTree& t, const LabeledFeatureSet& df) {
  if (df.label_source != LabelSource::Oracle) throw UsageError("fidelity needs oracle-labelled data");
  if (df.size() == 0) throw UsageError("fidelity of an empty dataset");
  return agreement(predict_all(t, df), df.labels);
}

inline double f1_vs_labels(const DecisionTree& t, const LabeledFeatureSet& ds) {
  return macro_f1(predict_all(t, ds), ds.labels);
}

// ---------------------------------------------------------------------------
// Strategies.

enum class Strategy { AccuracyDT, FidelityDT, TrusteeDT };

inline constexpr Strategy kAllStrategies[] = {Strategy::AccuracyDT, Strategy::FidelityDT, Strategy::TrusteeDT};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::AccuracyDT: return "accuracy";
    case Strategy::FidelityDT: return "fidelity";
    case Strategy::TrusteeDT: return "trustee";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  for (Strategy x : kAllStrategies)
    if (to_string(x) == s) return x;
  throw UsageError("unknown strategy '" + std::string(s) + "'");
}

inline DecisionTree train_accuracy_dt(const LabeledFeatureSet& ds, const DTParams& p = {}) {
  if (ds.label_source != LabelSource::Truth) throw UsageError("accuracy surrogate trains on true labels");
  return fit(ds.training_data(), p);
}

inline DecisionTree train_fidelity_dt(const LabeledFeatureSet& df, const DTParams& p = {}) {
  if (df.label_source != LabelSource::Oracle) throw UsageError("fidelity surrogate trains on oracle labels");
  return fit(df.training_data(), p);
}

struct TrusteeParams {
  int outer_iters = 10;
  int inner_iters = 20;
  // Fraction of the original rows each outer iteration starts from.
  double sample_fraction = 0.7;
  DTParams dt_params;
  std::uint64_t rng_seed = 0;
  unsigned jobs = 1;
};

// Per-candidate trace, kept so the loop's guarantees can be checked.
struct TrusteeCandidate {
  DecisionTree tree;
  std::uint64_t seed = 0;
  double fidelity = 0.0;
  double mean_agreement = 0.0;
  std::vector<double> inner_fidelities;
  std::vector<std::size_t> training_sizes;  // augmented set size per inner iteration
};

struct TrusteeResult {
  DecisionTree tree;
  std::size_t chosen = 0;
  std::vector<TrusteeCandidate> candidates;
};

inline TrusteeResult train_trustee_dt_traced(const LabeledFeatureSet& df, const TrusteeParams& tp = {}) {
  if (df.label_source != LabelSource::Oracle) throw UsageError("trustee surrogate trains on oracle labels");
  if (tp.outer_iters < 1 || tp.inner_iters < 1) throw UsageError("trustee iteration counts must be >= 1");
  if (df.size() == 0) throw UsageError("cannot train on an empty dataset");
  const std::size_t n = df.size();

  std::vector<TrusteeCandidate> cands(static_cast<std::size_t>(tp.outer_iters));
  parallel_for(cands.size(), tp.jobs, [&](std::size_t o) {
    TrusteeCandidate& c = cands[o];
    c.seed = derive_seed(tp.rng_seed, o);
    Rng rng(c.seed);

    std::vector<std::size_t> start(n);
    std::iota(start.begin(), start.end(), 0);
    rng.shuffle(std::span(start));
    const auto keep = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(tp.sample_fraction * static_cast<double>(n))), 1, n);
    start.resize(keep);
    std::sort(start.begin(), start.end());

    TrainingData train;
    train.feature_names = df.feature_names;
    for (std::size_t i : start) {
      train.rows.push_back(df.rows[i]);
      train.labels.push_back(df.labels[i]);
    }
    DTParams p = tp.dt_params;
    p.rng_seed = c.seed;
    double best = -1.0;
    for (int it = 0; it < tp.inner_iters; ++it) {
      c.training_sizes.push_back(train.size());
      DecisionTree t = fit(train, p);
      const auto pred = predict_all(t, df);
      const double fid = agreement(pred, df.labels);
      c.inner_fidelities.push_back(fid);
      if (fid > best) {
        best = fid;
        c.tree = t;
        c.fidelity = fid;
      }
      // Duplicate every original row the current tree gets wrong.
      for (std::size_t i = 0; i < n; ++i) {
        if (pred[i] == df.labels[i]) continue;
        train.rows.push_back(df.rows[i]);
        train.labels.push_back(df.labels[i]);
      }
    }
  });

  std::vector<std::vector<std::string>> preds;
  preds.reserve(cands.size());
  for (const auto& c : cands) preds.push_back(predict_all(c.tree, df));
  for (std::size_t a = 0; a < cands.size(); ++a) {
    if (cands.size() == 1) {
      cands[a].mean_agreement = 1.0;
      continue;
    }
    double sum = 0.0;
    for (std::size_t b = 0; b < cands.size(); ++b)
      if (a != b) sum += agreement(preds[a], preds[b]);
    cands[a].mean_agreement = sum / static_cast<double>(cands.size() - 1);
  }

  std::size_t chosen = 0;
  for (std::size_t a = 1; a < cands.size(); ++a) {
    const auto& x = cands[a];
    const auto& y = cands[chosen];
    bool better = false;
    if (x.mean_agreement != y.mean_agreement) better = x.mean_agreement > y.mean_agreement;
    else if (x.fidelity != y.fidelity) better = x.fidelity > y.fidelity;
    else if (x.tree.node_count() != y.tree.node_count()) better = x.tree.node_count() < y.tree.node_count();
    else better = x.seed < y.seed;
    if (better) chosen = a;
  }
  TrusteeResult res;
  res.tree = cands[chosen].tree;
  res.chosen = chosen;
  res.candidates = std::move(cands);
  return res;
}

inline DecisionTree train_trustee_dt(const LabeledFeatureSet& df, const TrusteeParams& tp = {}) {
  return train_trustee_dt_traced(df, tp).tree;
}

struct SurrogateConfig {
  DTParams dt_params;
  TrusteeParams trustee;
};

// D_S feeds the accuracy strategy; D_F the other two.
inline DecisionTree train_surrogate(Strategy s, const LabeledFeatureSet& ds, const LabeledFeatureSet& df,
                                    const SurrogateConfig& cfg) {
  switch (s) {
    case Strategy::AccuracyDT: return train_accuracy_dt(ds, cfg.dt_params);
    case Strategy::FidelityDT: return train_fidelity_dt(df, cfg.dt_params);
    case Strategy::TrusteeDT: {
      TrusteeParams tp = cfg.trustee;
      tp.dt_params = cfg.dt_params;
      return train_trustee_dt(df, tp);
    }
  }
  throw UsageError("unknown strategy");
}

// Mean pairwise Jaccard overlap of the given feature sets; 1 for fewer than two.
inline double mean_pairwise_jaccard(const std::vector<std::vector<std::string>>& sets) {
  if (sets.size() < 2) return 1.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::size_t b = a + 1; b < sets.size(); ++b) {
      std::set<std::string> sa(sets[a].begin(), sets[a].end()), sb(sets[b].begin(), sets[b].end());
      std::size_t inter = 0;
      for (const auto& x : sa) inter += sb.count(x);
      const std::size_t uni = sa.size() + sb.size() - inter;
      sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace provex
