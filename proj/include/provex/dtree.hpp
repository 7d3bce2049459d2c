#pragma once

// CART classification tree: greedy Gini splits on axis-aligned thresholds,
// addressed by feature name so trees stay readable after serialization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "provex/error.hpp"
#include "provex/features.hpp"
#include "provex/rng.hpp"

namespace provex {

enum class ClassWeighting { None, Balanced };

inline constexpr int kUnlimitedDepth = std::numeric_limits<int>::max();

struct DTParams {
  int max_depth = 8;
  int min_samples_leaf = 5;
  double min_impurity_decrease = 1e-7;
  ClassWeighting class_weighting = ClassWeighting::Balanced;
  std::uint64_t rng_seed = 0;
  // Features examined per split; 0 = all. Nonzero makes the tree randomized.
  std::size_t max_features = 0;
};

// Row-major training matrix with string class labels.
struct TrainingData {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;

  std::size_t size() const { return rows.size(); }
};

struct TreeNode {
  bool is_leaf = true;
  // Split fields.
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  double decrease = 0.0;  // Gini decrease at this node (unscaled)
  // Common fields.
  std::size_t label = 0;             // index into classes; majority by weight
  std::vector<std::size_t> counts;   // raw sample count per class
  std::size_t samples = 0;
  double weight_fraction = 0.0;      // node weight / root weight

  bool operator==(const TreeNode&) const = default;
};

enum class Direction { LessEqual, Greater };

struct PathStep {
  std::string feature;
  double threshold = 0.0;
  Direction direction = Direction::LessEqual;
  double value = 0.0;

  bool operator==(const PathStep&) const = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<std::string> feature_names, std::vector<std::string> classes,
               std::vector<TreeNode> nodes)
      : feature_names_(std::move(feature_names)), classes_(std::move(classes)), nodes_(std::move(nodes)) {}

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }

  std::size_t depth() const { return nodes_.empty() ? 0 : depth_from(0); }

  // Row laid out exactly as feature_names().
  const std::string& predict_row(std::span<const double> row) const {
    return classes_[nodes_[leaf_for(row)].label];
  }

  const std::string& predict(const FeatureVector& x) const { return predict_row(gather(x)); }

  std::vector<PathStep> decision_path(const FeatureVector& x) const {
    const auto row = gather(x);
    std::vector<PathStep> path;
    std::size_t i = 0;
    while (!nodes_[i].is_leaf) {
      const auto& n = nodes_[i];
      const double v = row[n.feature];
      const bool left = v <= n.threshold;
      path.push_back({feature_names_[n.feature], n.threshold, left ? Direction::LessEqual : Direction::Greater, v});
      i = left ? n.left : n.right;
    }
    return path;
  }

  // Weighted Gini decrease per referenced feature, normalized to sum 1.
  // Empty for a single-leaf tree.
  std::map<std::string, double> feature_importance() const {
    std::map<std::string, double> imp;
    double total = 0.0;
    for (const auto& n : nodes_) {
      if (n.is_leaf) continue;
      const double d = n.weight_fraction * n.decrease;
      imp[feature_names_[n.feature]] += d;
      total += d;
    }
    if (total > 0.0)
      for (auto& [_, v] : imp) v /= total;
    return imp;
  }

  // Up to k features with positive importance, most important first; ties by name.
  std::vector<std::string> top_features(std::size_t k) const {
    auto imp = feature_importance();
    std::vector<std::pair<std::string, double>> items(imp.begin(), imp.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (const auto& [name, v] : items) {
      if (out.size() == k || v <= 0.0) break;
      out.push_back(name);
    }
    return out;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<double> gather(const FeatureVector& x) const {
    std::vector<double> row(feature_names_.size(), 0.0);
    std::vector<bool> used(feature_names_.size(), false);
    for (const auto& n : nodes_)
      if (!n.is_leaf) used[n.feature] = true;
    for (std::size_t f = 0; f < feature_names_.size(); ++f)
      if (used[f]) row[f] = x.at(feature_names_[f]);
    return row;
  }

  std::size_t leaf_for(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf) i = row[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return i;
  }

  std::size_t depth_from(std::size_t i) const {
    if (nodes_[i].is_leaf) return 0;
    return 1 + std::max(depth_from(nodes_[i].left), depth_from(nodes_[i].right));
  }

  std::vector<std::string> feature_names_;
  std::vector<std::string> classes_;
  std::vector<TreeNode> nodes_;
};

// ---------------------------------------------------------------------------
// Training.

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = -1.0;
  bool valid = false;
};

inline double gini(std::span<const double> class_weight, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double w : class_weight) s += (w / total) * (w / total);
  return 1.0 - s;
}

// Midpoint of two consecutive distinct values, kept strictly below `hi` so
// `hi` routes right.
inline double split_threshold(double lo, double hi) {
  double t = lo + (hi - lo) / 2.0;
  if (t >= hi || !std::isfinite(t)) t = lo;
  return t;
}

namespace detail {

class CartBuilder {
 public:
  CartBuilder(const TrainingData& data, const DTParams& p)
      : data_(data), p_(p), rng_(p.rng_seed) {
    classes_ = data.labels;
    std::sort(classes_.begin(), classes_.end());
    classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
    y_.reserve(data.size());
    for (const auto& l : data.labels)
      y_.push_back(static_cast<std::size_t>(std::lower_bound(classes_.begin(), classes_.end(), l) - classes_.begin()));
    class_weight_.assign(classes_.size(), 1.0);
    if (p.class_weighting == ClassWeighting::Balanced) {
      std::vector<std::size_t> n(classes_.size(), 0);
      for (std::size_t c : y_) ++n[c];
      for (std::size_t c = 0; c < classes_.size(); ++c)
        class_weight_[c] = static_cast<double>(y_.size()) / (static_cast<double>(classes_.size()) * static_cast<double>(n[c]));
    }
  }

  DecisionTree build() {
    std::vector<std::size_t> idx(data_.size());
    std::iota(idx.begin(), idx.end(), 0);
    root_weight_ = 0.0;
    for (std::size_t i : idx) root_weight_ += class_weight_[y_[i]];
    grow(idx, 0);
    return DecisionTree(data_.feature_names, classes_, std::move(nodes_));
  }

 private:
  std::size_t grow(std::vector<std::size_t>& idx, int depth) {
    const std::size_t me = nodes_.size();
    nodes_.emplace_back();
    std::vector<double> cw(classes_.size(), 0.0);
    std::vector<std::size_t> counts(classes_.size(), 0);
    for (std::size_t i : idx) {
      cw[y_[i]] += class_weight_[y_[i]];
      ++counts[y_[i]];
    }
    const double w = std::accumulate(cw.begin(), cw.end(), 0.0);
    {
      TreeNode& n = nodes_[me];
      n.counts = counts;
      n.samples = idx.size();
      n.weight_fraction = w / root_weight_;
      n.label = static_cast<std::size_t>(std::max_element(cw.begin(), cw.end()) - cw.begin());
    }
    const std::size_t present = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
    const std::size_t msl = static_cast<std::size_t>(std::max(1, p_.min_samples_leaf));
    if (depth >= p_.max_depth || present <= 1 || idx.size() < 2 * msl) return me;

    const SplitCandidate best = best_split(idx, cw, w);
    if (!best.valid) return me;
    if (std::max(0.0, best.decrease) * (w / root_weight_) < p_.min_impurity_decrease) return me;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) (data_.rows[i][best.feature] <= best.threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    const std::size_t l = grow(left, depth + 1);
    const std::size_t r = grow(right, depth + 1);
    TreeNode& n = nodes_[me];
    n.is_leaf = false;
    n.feature = best.feature;
    n.threshold = best.threshold;
    n.decrease = best.decrease;
    n.left = l;
    n.right = r;
    return me;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = data_.feature_names.size();
    std::vector<std::size_t> f(d);
    std::iota(f.begin(), f.end(), 0);
    if (p_.max_features == 0 || p_.max_features >= d) return f;
    // Partial Fisher-Yates, then restore ascending order for tie-breaking.
    for (std::size_t i = 0; i < p_.max_features; ++i) std::swap(f[i], f[i + rng_.below(d - i)]);
    f.resize(p_.max_features);
    std::sort(f.begin(), f.end());
    return f;
  }

  SplitCandidate best_split(const std::vector<std::size_t>& idx, const std::vector<double>& cw, double w) {
    const double parent = gini(cw, w);
    const std::size_t msl = static_cast<std::size_t>(std::max(1, p_.min_samples_leaf));
    SplitCandidate best;
    std::vector<std::size_t> order(idx);
    std::vector<double> left(classes_.size());
    std::vector<double> right(classes_.size());
    for (std::size_t f : candidate_features()) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = data_.rows[a][f], vb = data_.rows[b][f];
        return va < vb || (va == vb && a < b);
      });
      std::fill(left.begin(), left.end(), 0.0);
      double wl = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k];
        left[y_[i]] += class_weight_[y_[i]];
        wl += class_weight_[y_[i]];
        const double lo = data_.rows[i][f];
        const double hi = data_.rows[order[k + 1]][f];
        if (!(lo < hi)) continue;
        const std::size_t nl = k + 1, nr = order.size() - nl;
        if (nl < msl || nr < msl) continue;
        const double wr = w - wl;
        for (std::size_t c = 0; c < classes_.size(); ++c) right[c] = cw[c] - left[c];
        const double dec = parent - (wl / w) * gini(left, wl) - (wr / w) * gini(right, wr);
        if (!best.valid || dec > best.decrease + 1e-12) {
          best = {f, split_threshold(lo, hi), dec, true};
        }
      }
    }
    return best;
  }

  const TrainingData& data_;
  DTParams p_;
  Rng rng_;
  std::vector<std::string> classes_;
  std::vector<std::size_t> y_;
  std::vector<double> class_weight_;
  double root_weight_ = 0.0;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

inline DecisionTree fit(const TrainingData& data, const DTParams& p = {}) {
  if (data.rows.empty()) throw UsageError("cannot fit a tree on an empty dataset");
  if (data.rows.size() != data.labels.size()) throw UsageError("row/label count mismatch");
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    if (data.rows[r].size() != data.feature_names.size())
      throw UsageError("row " + std::to_string(r) + " has wrong width");
    for (double x : data.rows[r])
      if (!std::isfinite(x)) throw DataError("non-finite feature value in row " + std::to_string(r));
  }
  if (p.max_depth < 0 || p.min_samples_leaf < 1) throw UsageError("invalid tree parameters");
  return detail::CartBuilder(data, p).build();
}

// ---------------------------------------------------------------------------
// Serialization.

namespace detail {

inline nlohmann::ordered_json node_to_json(const DecisionTree& t, std::size_t i) {
  const TreeNode& n = t.nodes()[i];
  nlohmann::ordered_json j;
  if (n.is_leaf) {
    j["kind"] = "leaf";
  } else {
    j["kind"] = "split";
    j["feature"] = t.feature_names()[n.feature];
    j["threshold"] = n.threshold;
    j["decrease"] = n.decrease;
  }
  j["label"] = t.classes()[n.label];
  j["samples"] = n.samples;
  j["weight_fraction"] = n.weight_fraction;
  j["counts"] = n.counts;
  if (!n.is_leaf) {
    j["left"] = node_to_json(t, n.left);
    j["right"] = node_to_json(t, n.right);
  }
  return j;
}

inline std::size_t node_from_json(const nlohmann::json& j, const std::vector<std::string>& features,
                                  const std::vector<std::string>& classes, std::vector<TreeNode>& out) {
  const std::size_t me = out.size();
  out.emplace_back();
  TreeNode n;
  n.samples = j.at("samples").get<std::size_t>();
  n.weight_fraction = j.at("weight_fraction").get<double>();
  n.counts = j.at("counts").get<std::vector<std::size_t>>();
  if (n.counts.size() != classes.size()) throw DataError("tree node has wrong class count");
  auto cls = std::find(classes.begin(), classes.end(), j.at("label").get<std::string>());
  if (cls == classes.end()) throw DataError("tree node references unknown class");
  n.label = static_cast<std::size_t>(cls - classes.begin());
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "split") {
    auto it = std::find(features.begin(), features.end(), j.at("feature").get<std::string>());
    if (it == features.end()) throw DataError("tree split references unknown feature");
    n.is_leaf = false;
    n.feature = static_cast<std::size_t>(it - features.begin());
    n.threshold = j.at("threshold").get<double>();
    if (!std::isfinite(n.threshold)) throw DataError("non-finite split threshold");
    n.decrease = j.at("decrease").get<double>();
    n.left = node_from_json(j.at("left"), features, classes, out);
    n.right = node_from_json(j.at("right"), features, classes, out);
  } else if (kind != "leaf") {
    throw DataError("unknown tree node kind '" + kind + "'");
  }
  out[me] = std::move(n);
  return me;
}

}  // namespace detail

inline std::string tree_to_json(const DecisionTree& t) {
  nlohmann::ordered_json j;
  j["format"] = "provex-tree";
  j["version"] = 1;
  j["feature_names"] = t.feature_names();
  j["classes"] = t.classes();
  j["root"] = t.nodes().empty() ? nlohmann::ordered_json(nullptr) : detail::node_to_json(t, 0);
  return j.dump(2) + "\n";
}

inline DecisionTree tree_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "provex-tree") throw DataError("not a provex tree file");
    auto features = j.at("feature_names").get<std::vector<std::string>>();
    auto classes = j.at("classes").get<std::vector<std::string>>();
    std::vector<TreeNode> nodes;
    detail::node_from_json(j.at("root"), features, classes, nodes);
    return DecisionTree(std::move(features), std::move(classes), std::move(nodes));
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed tree file: ") + ex.what());
  }
}

inline std::string format_threshold(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << x;
  return ss.str();
}

inline std::string export_dot(const DecisionTree& t) {
  auto escape = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  std::ostringstream dot;
  dot << "digraph DecisionTree {\n";
  dot << "  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < t.node_count(); ++i) {
    const TreeNode& n = t.nodes()[i];
    if (n.is_leaf) {
      dot << "  n" << i << " [label=\"" << escape(t.classes()[n.label]) << "\\nsamples = " << n.samples
          << "\\ncounts = [";
      for (std::size_t c = 0; c < n.counts.size(); ++c) dot << (c ? ", " : "") << n.counts[c];
      dot << "]\", style=rounded];\n";
    } else {
      dot << "  n" << i << " [label=\"" << escape(t.feature_names()[n.feature]) << " ≤ "
          << format_threshold(n.threshold) << "\\nsamples = " << n.samples << "\"];\n";
    }
  }
  for (std::size_t i = 0; i < t.node_count(); ++i) {
    const TreeNode& n = t.nodes()[i];
    if (n.is_leaf) continue;
    dot << "  n" << i << " -> n" << n.left << " [label=\"true\"];\n";
    dot << "  n" << i << " -> n" << n.right << " [label=\"false\"];\n";
  }
  dot << "}\n";
  return dot.str();
}

}  // namespace provex
