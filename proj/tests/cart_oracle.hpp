#pragma once

// Exhaustive root-split search used as the reference for CART tests.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "provex/dtree.hpp"
#include "provex/rng.hpp"

namespace brute {

struct RootSplit {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;
};

// Gini of a subset, recounted from scratch with the given per-class weights.
inline double subset_gini(const std::vector<std::string>& labels, const std::vector<std::size_t>& idx,
                          const std::map<std::string, double>& w, double* total_out) {
  std::map<std::string, double> acc;
  double total = 0;
  for (std::size_t i : idx) {
    acc[labels[i]] += w.at(labels[i]);
    total += w.at(labels[i]);
  }
  *total_out = total;
  if (total == 0) return 0;
  double s = 0;
  for (const auto& [_, a] : acc) s += (a / total) * (a / total);
  return 1 - s;
}

// Tries every feature and every midpoint between consecutive distinct
// values. Ties (within 1e-12) keep the earliest (feature, threshold).
inline RootSplit exhaustive_root_split(const provex::TrainingData& d, bool balanced, std::size_t min_leaf = 1) {
  std::map<std::string, double> w;
  std::map<std::string, std::size_t> counts;
  for (const auto& l : d.labels) ++counts[l];
  for (const auto& [l, c] : counts)
    w[l] = balanced ? static_cast<double>(d.size()) / (static_cast<double>(counts.size()) * static_cast<double>(c)) : 1.0;
  RootSplit best;
  if (counts.size() < 2) return best;
  std::vector<std::size_t> all(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) all[i] = i;
  double wt = 0;
  const double parent = subset_gini(d.labels, all, w, &wt);
  for (std::size_t f = 0; f < d.feature_names.size(); ++f) {
    std::set<double> values;
    for (const auto& r : d.rows) values.insert(r[f]);
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double thr = (v[k] + v[k + 1]) / 2;
      std::vector<std::size_t> left, right;
      for (std::size_t i = 0; i < d.size(); ++i) (d.rows[i][f] <= thr ? left : right).push_back(i);
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      double wl = 0, wr = 0;
      const double gl = subset_gini(d.labels, left, w, &wl);
      const double gr = subset_gini(d.labels, right, w, &wr);
      const double dec = parent - (wl / wt) * gl - (wr / wt) * gr;
      if (!best.valid || dec > best.decrease + 1e-12) best = {true, f, thr, dec};
    }
  }
  return best;
}

// Tiny dataset with small integer-valued features so ties are common.
inline provex::TrainingData random_tiny_dataset(provex::Rng& rng, std::size_t max_rows = 8, std::size_t max_features = 3) {
  provex::TrainingData d;
  const std::size_t n = 2 + rng.below(max_rows - 1);
  const std::size_t f = 1 + rng.below(max_features);
  const std::size_t classes = 2 + rng.below(2);
  for (std::size_t j = 0; j < f; ++j) d.feature_names.push_back("x" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < f; ++j) row.push_back(static_cast<double>(rng.below(5)) * (j == 1 ? 0.25 : 1.0));
    d.rows.push_back(row);
    d.labels.push_back(std::string(1, static_cast<char>('a' + rng.below(classes))));
  }
  return d;
}

}  // namespace brute
