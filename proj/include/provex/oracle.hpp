#pragma once

// Black-box classifiers the surrogates are distilled from. Three kinds:
// a JSON-lines prediction file, an external process speaking a line-delimited
// JSON protocol, and a built-in bagged tree ensemble that sees more than the
// surrogate's feature vector.

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "provex/dtree.hpp"
#include "provex/error.hpp"
#include "provex/features.hpp"
#include "provex/graph.hpp"
#include "provex/parallel.hpp"
#include "provex/rng.hpp"

namespace provex {

struct Prediction {
  std::string graph_id;
  std::string label;
  std::optional<std::map<std::string, double>> scores;

  bool operator==(const Prediction&) const = default;
};

enum class OracleKind { PredictionFile, Subprocess, BuiltinEnsemble };

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleKind kind() const = 0;
  // One prediction per graph, in input order.
  virtual std::vector<Prediction> query(std::span<const ProvGraph> graphs) const = 0;
};

inline std::string prediction_to_json_line(const Prediction& p) {
  nlohmann::ordered_json j;
  j["graph_id"] = p.graph_id;
  j["label"] = p.label;
  if (p.scores) {
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [k, v] : *p.scores) s[k] = v;
    j["scores"] = std::move(s);
  } else {
    j["scores"] = nullptr;
  }
  return j.dump();
}

inline Prediction prediction_from_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    Prediction p;
    p.graph_id = j.at("graph_id").get<std::string>();
    p.label = j.at("label").get<std::string>();
    if (auto it = j.find("scores"); it != j.end() && !it->is_null()) {
      std::map<std::string, double> s;
      for (auto e = it->begin(); e != it->end(); ++e) {
        const double v = e.value().get<double>();
        if (!(v >= 0.0)) throw OracleError("negative score for class '" + e.key() + "'");
        s[e.key()] = v;
      }
      p.scores = std::move(s);
    }
    return p;
  } catch (const nlohmann::json::exception& ex) {
    throw OracleError(std::string("malformed prediction line: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------

class PredictionFileOracle final : public Oracle {
 public:
  explicit PredictionFileOracle(std::vector<Prediction> predictions) {
    for (auto& p : predictions) by_id_[p.graph_id] = std::move(p);
  }

  static PredictionFileOracle parse(std::string_view text) {
    std::vector<Prediction> preds;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t end = std::min(text.find('\n', pos), text.size());
      std::string_view line = text.substr(pos, end - pos);
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) {
        try {
          preds.push_back(prediction_from_json_line(line));
        } catch (const OracleError& ex) {
          throw OracleError("prediction file line " + std::to_string(line_no) + ": " + ex.what());
        }
      }
      if (end == text.size()) break;
      pos = end + 1;
    }
    return PredictionFileOracle(std::move(preds));
  }

  static PredictionFileOracle load(const std::filesystem::path& path) {
    std::string text;
    try {
      text = read_text_file(path);
    } catch (const DataError& ex) {
      throw OracleError(ex.what());
    }
    return parse(text);
  }

  OracleKind kind() const override { return OracleKind::PredictionFile; }
  std::size_t size() const { return by_id_.size(); }

  std::vector<Prediction> query(std::span<const ProvGraph> graphs) const override {
    std::vector<Prediction> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) {
      auto it = by_id_.find(g.graph_id());
      if (it == by_id_.end()) throw OracleError("prediction file has no entry for graph '" + g.graph_id() + "'");
      out.push_back(it->second);
    }
    return out;
  }

 private:
  std::unordered_map<std::string, Prediction> by_id_;
};

// ---------------------------------------------------------------------------

// Runs `/bin/sh -c command` per query. The child reads one graph JSON per line
// on stdin and answers with one prediction line per graph, in order, then
// exits 0.
class SubprocessOracle final : public Oracle {
 public:
  explicit SubprocessOracle(std::string command) : command_(std::move(command)) {}

  OracleKind kind() const override { return OracleKind::Subprocess; }

  std::vector<Prediction> query(std::span<const ProvGraph> graphs) const override {
    std::lock_guard lock(mu_);
    std::string input;
    for (const auto& g : graphs) {
      input += serialize_graph(g);
      input += '\n';
    }
    const auto [status, output] = run(input);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
      throw OracleError("oracle command exited abnormally (status " + std::to_string(status) + "): " + command_);

    std::vector<Prediction> out;
    std::istringstream lines(output);
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      out.push_back(prediction_from_json_line(line));
    }
    if (out.size() != graphs.size())
      throw OracleError("oracle command returned " + std::to_string(out.size()) + " predictions for " +
                        std::to_string(graphs.size()) + " graphs");
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i].graph_id != graphs[i].graph_id())
        throw OracleError("oracle command answered out of order at line " + std::to_string(i + 1));
    return out;
  }

 private:
  std::pair<int, std::string> run(const std::string& input) const {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw OracleError("pipe() failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw OracleError("pipe() failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw OracleError("fork() failed");
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);

    // A child that exits early must not kill us with SIGPIPE.
    struct sigaction ignore {}, previous {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);

    std::thread writer([fd = to_child[1], &input] {
      std::size_t off = 0;
      while (off < input.size()) {
        const ssize_t n = ::write(fd, input.data() + off, input.size() - off);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        off += static_cast<std::size_t>(n);
      }
      close(fd);
    });
    std::string output;
    std::array<char, 65536> buf;
    for (;;) {
      const ssize_t n = ::read(from_child[0], buf.data(), buf.size());
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      output.append(buf.data(), static_cast<std::size_t>(n));
    }
    close(from_child[0]);
    writer.join();
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    sigaction(SIGPIPE, &previous, nullptr);
    return {status, std::move(output)};
  }

  std::string command_;
  mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Built-in stand-in black box.

inline constexpr std::size_t kWalkBins = 16;
inline constexpr std::size_t kWalkLength = 3;
inline constexpr std::size_t kWalksPerGraph = 128;

// Histogram of hashed (kind, op, kind, ...) sequences along random forward
// walks of up to kWalkLength arcs. Frequencies sum to 1 when any arc exists.
inline std::array<double, kWalkBins> random_walk_histogram(const ProvGraph& g, std::uint64_t seed) {
  std::array<double, kWalkBins> hist{};
  const auto adj = orient_edges(g);
  std::vector<std::vector<const Arc*>> out(g.node_count());
  for (const Arc& a : adj.arcs()) out[a.from].push_back(&a);
  std::vector<std::size_t> starts;
  for (std::size_t v = 0; v < g.node_count(); ++v)
    if (!out[v].empty()) starts.push_back(v);
  if (starts.empty()) return hist;

  Rng rng(derive_seed(seed, fnv1a64(g.graph_id())));
  for (std::size_t w = 0; w < kWalksPerGraph; ++w) {
    std::size_t v = starts[rng.below(starts.size())];
    std::string token(to_string(g.kind(v)));
    for (std::size_t step = 0; step < kWalkLength && !out[v].empty(); ++step) {
      const Arc* a = out[v][rng.below(out[v].size())];
      token += '>';
      token += to_string(a->op);
      token += '>';
      token += to_string(g.kind(a->to));
      v = a->to;
    }
    hist[fnv1a64(token) % kWalkBins] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(kWalksPerGraph);
  return hist;
}

inline std::vector<std::string> builtin_feature_names() {
  auto names = canonical_feature_names();
  for (std::size_t b = 0; b < kWalkBins; ++b) names.push_back("walk_bin_" + std::to_string(b));
  return names;
}

inline std::vector<double> builtin_features(const ProvGraph& g, std::uint64_t seed) {
  auto row = extract(g).values;
  for (double h : random_walk_histogram(g, seed)) row.push_back(h);
  return row;
}

struct EnsembleParams {
  std::size_t trees = 25;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

class BuiltinEnsembleOracle final : public Oracle {
 public:
  BuiltinEnsembleOracle(std::vector<DecisionTree> trees, std::vector<std::string> classes, std::uint64_t seed,
                        unsigned jobs = 1)
      : trees_(std::move(trees)), classes_(std::move(classes)), seed_(seed), jobs_(jobs) {}

  OracleKind kind() const override { return OracleKind::BuiltinEnsemble; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  Prediction predict_row(const std::string& graph_id, std::span<const double> row) const {
    Prediction p;
    p.graph_id = graph_id;
    if (trees_.empty()) {
      p.label = classes_.front();
      p.scores = std::map<std::string, double>{{p.label, 1.0}};
      return p;
    }
    std::map<std::string, double> votes;
    for (const auto& c : classes_) votes[c] = 0.0;
    for (const auto& t : trees_) votes[t.predict_row(row)] += 1.0;
    double best = -1.0;
    for (const auto& c : classes_) {  // classes_ sorted => ties go to the lowest
      if (votes[c] > best) {
        best = votes[c];
        p.label = c;
      }
    }
    for (auto& [_, v] : votes) v /= static_cast<double>(trees_.size());
    p.scores = std::move(votes);
    return p;
  }

  std::vector<Prediction> query(std::span<const ProvGraph> graphs) const override {
    std::vector<Prediction> out(graphs.size());
    parallel_for(graphs.size(), jobs_, [&](std::size_t i) {
      out[i] = predict_row(graphs[i].graph_id(), builtin_features(graphs[i], seed_));
    });
    return out;
  }

 private:
  std::vector<DecisionTree> trees_;
  std::vector<std::string> classes_;
  std::uint64_t seed_;
  unsigned jobs_;
};

// Bagged ensemble of fully grown randomized trees over the canonical vector
// plus walk histograms.
inline BuiltinEnsembleOracle train_builtin(std::span<const ProvGraph> graphs, std::span<const std::string> labels,
                                           const EnsembleParams& params = {}) {
  if (graphs.empty()) throw UsageError("cannot train the built-in oracle on an empty corpus");
  if (graphs.size() != labels.size()) throw UsageError("graph/label count mismatch");
  TrainingData data;
  data.feature_names = builtin_feature_names();
  data.rows.resize(graphs.size());
  data.labels.assign(labels.begin(), labels.end());
  parallel_for(graphs.size(), params.jobs,
               [&](std::size_t i) { data.rows[i] = builtin_features(graphs[i], params.seed); });

  std::vector<std::string> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() == 1) return BuiltinEnsembleOracle({}, classes, params.seed, params.jobs);

  std::vector<DecisionTree> trees(params.trees);
  const auto mtry = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(data.feature_names.size()))));
  parallel_for(params.trees, params.jobs, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, t);
    Rng rng(tree_seed);
    TrainingData sample;
    sample.feature_names = data.feature_names;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t pick = rng.below(data.size());
      sample.rows.push_back(data.rows[pick]);
      sample.labels.push_back(data.labels[pick]);
    }
    DTParams p;
    p.max_depth = kUnlimitedDepth;
    p.min_samples_leaf = 1;
    p.min_impurity_decrease = 0.0;
    p.class_weighting = ClassWeighting::Balanced;
    p.max_features = mtry;
    p.rng_seed = derive_seed(tree_seed, 1);
    trees[t] = fit(sample, p);
  });
  return BuiltinEnsembleOracle(std::move(trees), std::move(classes), params.seed, params.jobs);
}

}  // namespace provex
