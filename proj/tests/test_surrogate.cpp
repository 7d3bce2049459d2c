#include <gtest/gtest.h>

#include <map>
#include <set>

#include "provex/surrogate.hpp"

using namespace provex;

namespace {

using Labels = std::vector<std::string>;

// Per-class F1 computed the long way, from a confusion table.
double reference_macro_f1(const Labels& pred, const Labels& truth) {
  std::set<std::string> classes(pred.begin(), pred.end());
  classes.insert(truth.begin(), truth.end());
  double sum = 0;
  for (const auto& c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == c && truth[i] == c) tp += 1;
      if (pred[i] == c && truth[i] != c) fp += 1;
      if (pred[i] != c && truth[i] == c) fn += 1;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0;
    sum += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0;
  }
  return sum / static_cast<double>(classes.size());
}

// Two informative features plus one noise column; labels follow x0 + x1
// with a few flips, so trees cannot be perfect.
LabeledFeatureSet noisy_dataset(std::uint64_t seed, std::size_t n, LabelSource src) {
  Rng rng(seed);
  LabeledFeatureSet d;
  d.feature_names = {"x0", "x1", "noise"};
  d.label_source = src;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.unit(), b = rng.unit();
    d.rows.push_back({a, b, rng.unit()});
    std::string l = a + b > 1.0 ? "hi" : (a > 0.8 ? "edge" : "lo");
    if (rng.chance(0.1)) l = l == "hi" ? "lo" : "hi";
    d.labels.push_back(l);
    d.graph_ids.push_back("r" + std::to_string(i));
  }
  return d;
}

TrusteeParams trustee(int outer, int inner, std::uint64_t seed = 0, unsigned jobs = 1, double fraction = 0.7) {
  TrusteeParams tp;
  tp.outer_iters = outer;
  tp.inner_iters = inner;
  tp.rng_seed = seed;
  tp.jobs = jobs;
  tp.sample_fraction = fraction;
  return tp;
}

}  // namespace

TEST(Metrics, AgreementFixtures) {
  const Labels a = {"m", "m", "b", "b"}, b = {"m", "b", "b", "b"};
  EXPECT_DOUBLE_EQ(agreement(a, b), 0.75);
  EXPECT_DOUBLE_EQ(agreement(a, a), 1.0);
  const Labels inv = {"b", "b", "m", "m"};
  EXPECT_DOUBLE_EQ(agreement(a, inv), 0.0);
  EXPECT_THROW(agreement(a, Labels{"m"}), UsageError);
  EXPECT_THROW(agreement(Labels{}, Labels{}), UsageError);
}

TEST(Metrics, MacroF1Fixtures) {
  // Always predicting one of three balanced classes.
  const Labels truth = {"a", "b", "c"}, pred = {"a", "a", "a"};
  EXPECT_NEAR(macro_f1(pred, truth), (0.5 + 0 + 0) / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(macro_f1(truth, truth), 1.0);
  const Labels flipped = {"b", "a"}, orig = {"a", "b"};
  EXPECT_DOUBLE_EQ(macro_f1(flipped, orig), 0.0);
}

TEST(Metrics, MacroF1MatchesReference) {
  Rng rng(11);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 1 + rng.below(30);
    Labels p, t;
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
      t.push_back(std::string(1, static_cast<char>('a' + rng.below(3))));
    }
    ASSERT_NEAR(macro_f1(p, t), reference_macro_f1(p, t), 1e-12);
  }
}

TEST(Metrics, Jaccard) {
  EXPECT_DOUBLE_EQ(mean_pairwise_jaccard({{"a", "b"}}), 1.0);
  EXPECT_DOUBLE_EQ(mean_pairwise_jaccard({{"a", "b"}, {"b", "c"}}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mean_pairwise_jaccard({{"a"}, {"a"}, {"b"}}), (1.0 + 0 + 0) / 3.0);
  EXPECT_DOUBLE_EQ(mean_pairwise_jaccard({{}, {}}), 1.0);
}

TEST(Strategies, ParseAndName) {
  for (Strategy s : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("RandomDT"), UsageError);
}

TEST(Strategies, ConstantOracleGivesPerfectFidelity) {
  auto df = noisy_dataset(1, 80, LabelSource::Oracle);
  std::fill(df.labels.begin(), df.labels.end(), "benign");
  EXPECT_DOUBLE_EQ(fidelity(train_fidelity_dt(df), df), 1.0);
  EXPECT_DOUBLE_EQ(fidelity(train_trustee_dt(df, trustee(3, 3)), df), 1.0);
  EXPECT_EQ(train_fidelity_dt(df).node_count(), 1u);
}

TEST(Strategies, SameLabelsGiveSameTree) {
  const auto ds = noisy_dataset(2, 120, LabelSource::Truth);
  auto df = ds;
  df.label_source = LabelSource::Oracle;
  const auto a = train_accuracy_dt(ds), f = train_fidelity_dt(df);
  EXPECT_EQ(tree_to_json(a), tree_to_json(f));
}

TEST(Strategies, LabelSourceIsChecked) {
  const auto ds = noisy_dataset(3, 40, LabelSource::Truth);
  auto df = ds;
  df.label_source = LabelSource::Oracle;
  EXPECT_THROW(train_accuracy_dt(df), UsageError);
  EXPECT_THROW(train_fidelity_dt(ds), UsageError);
  EXPECT_THROW(train_trustee_dt(ds), UsageError);
  EXPECT_THROW(fidelity(train_accuracy_dt(ds), ds), UsageError);
}

TEST(Trustee, TraceInvariants) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const auto df = noisy_dataset(seed, 150, LabelSource::Oracle);
    const auto r = train_trustee_dt_traced(df, trustee(5, 6, seed));
    ASSERT_EQ(r.candidates.size(), 5u);
    for (const auto& c : r.candidates) {
      ASSERT_EQ(c.training_sizes.size(), 6u);
      EXPECT_EQ(c.training_sizes.front(), 105u);  // round(0.7 * 150)
      for (std::size_t i = 1; i < c.training_sizes.size(); ++i) EXPECT_GE(c.training_sizes[i], c.training_sizes[i - 1]);
      EXPECT_GE(c.fidelity, c.inner_fidelities.front());
      EXPECT_DOUBLE_EQ(c.fidelity, *std::max_element(c.inner_fidelities.begin(), c.inner_fidelities.end()));
      EXPECT_DOUBLE_EQ(c.fidelity, fidelity(c.tree, df));
    }
    // The pick has the highest mean agreement.
    for (const auto& c : r.candidates) EXPECT_LE(c.mean_agreement, r.candidates[r.chosen].mean_agreement);
    EXPECT_EQ(tree_to_json(r.tree), tree_to_json(r.candidates[r.chosen].tree));
  }
}

TEST(Trustee, SingleOuterIteration) {
  const auto df = noisy_dataset(5, 60, LabelSource::Oracle);
  const auto r = train_trustee_dt_traced(df, trustee(1, 4));
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_DOUBLE_EQ(r.candidates[0].mean_agreement, 1.0);
  EXPECT_THROW(train_trustee_dt(df, trustee(0, 1)), UsageError);
}

TEST(Trustee, DeterministicAcrossThreadCounts) {
  const auto df = noisy_dataset(6, 100, LabelSource::Oracle);
  const auto a = train_trustee_dt(df, trustee(4, 4, 9, 1));
  const auto b = train_trustee_dt(df, trustee(4, 4, 9, 3));
  const auto c = train_trustee_dt(df, trustee(4, 4, 9, 1));
  EXPECT_EQ(tree_to_json(a), tree_to_json(b));
  EXPECT_EQ(tree_to_json(a), tree_to_json(c));
}

TEST(Trustee, FullSampleFirstInnerMatchesFidelityTree) {
  const auto df = noisy_dataset(7, 90, LabelSource::Oracle);
  const auto r = train_trustee_dt_traced(df, trustee(1, 1, 0, 1, 1.0));
  EXPECT_DOUBLE_EQ(r.candidates[0].fidelity, fidelity(train_fidelity_dt(df), df));
}

TEST(Surrogate, DispatchUsesRightDataset) {
  const auto ds = noisy_dataset(8, 80, LabelSource::Truth);
  auto df = noisy_dataset(9, 80, LabelSource::Oracle);
  const SurrogateConfig cfg;
  EXPECT_EQ(tree_to_json(train_surrogate(Strategy::AccuracyDT, ds, df, cfg)),
            tree_to_json(train_accuracy_dt(ds)));
  EXPECT_EQ(tree_to_json(train_surrogate(Strategy::FidelityDT, ds, df, cfg)),
            tree_to_json(train_fidelity_dt(df)));
}
