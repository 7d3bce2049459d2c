#pragma once

// Canonical per-graph feature vector and the named feature groups used for
// ablation.
//
// Layout (version 1, 45 features):
//   [0, 12)   event/entity counts        n_nodes ... n_connect
//   [12, 18)  type-blind structural means mean_<feature>
//   [18, 36)  type-aware structural means process_*, file_*, socket_*
//   [36, 45)  security motif counts      dropper_triangles ... external_sockets

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "provex/csv.hpp"
#include "provex/graph.hpp"
#include "provex/security.hpp"
#include "provex/structural.hpp"

namespace provex {

inline constexpr int kFeatureLayoutVersion = 1;

inline constexpr std::array<const char*, 12> kCountFeatureNames = {
    "n_nodes", "n_edges", "n_process", "n_file", "n_socket", "n_read",
    "n_write", "n_exec",  "n_fork",    "n_send", "n_recv",   "n_connect"};

inline const std::vector<std::string>& canonical_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const char* c : kCountFeatureNames) n.emplace_back(c);
    for (const char* f : kNodeFeatureNames) n.push_back(std::string("mean_") + f);
    for (NodeKind k : kAllKinds)
      for (const char* f : kNodeFeatureNames) n.push_back(std::string(to_string(k)) + "_" + f);
    for (const char* m : kMotifFeatureNames) n.emplace_back(m);
    return n;
  }();
  return names;
}

inline constexpr std::size_t kCanonicalFeatureCount = 45;

struct FeatureVector {
  std::string graph_id;
  std::vector<std::string> names;
  std::vector<double> values;
  std::optional<std::string> label;

  std::size_t size() const { return values.size(); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }

  double at(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw DataError("feature vector for '" + graph_id + "' has no feature '" + std::string(name) + "'");
    return values[*i];
  }

  bool operator==(const FeatureVector&) const = default;
};

struct ExtractOptions {
  // Appends 18 per-kind max aggregates (max_process_* ...) after the
  // canonical layout. Off in the default vector.
  bool include_max_aggregates = false;
};

inline FeatureVector extract(const ProvGraph& g, const ExtractOptions& opts = {}) {
  FeatureVector fv;
  fv.graph_id = g.graph_id();
  fv.label = g.label();
  fv.names = canonical_feature_names();
  fv.values.reserve(kCanonicalFeatureCount);

  std::array<std::size_t, kNodeKindCount> kinds{};
  std::array<std::size_t, kEdgeOpCount> ops{};
  for (const auto& n : g.nodes()) ++kinds[static_cast<std::size_t>(n.kind)];
  for (const auto& e : g.edges()) ++ops[static_cast<std::size_t>(e.op)];
  fv.values.push_back(static_cast<double>(g.node_count()));
  fv.values.push_back(static_cast<double>(g.edge_count()));
  for (std::size_t k : kinds) fv.values.push_back(static_cast<double>(k));
  for (std::size_t o : ops) fv.values.push_back(static_cast<double>(o));

  const NodeFeatureTable table = node_features(g);
  for (const auto& nv : aggregate_all(table, "mean_")) fv.values.push_back(nv.value);
  for (const auto& nv : aggregate_by_kind(table, g)) fv.values.push_back(nv.value);
  for (double m : motif_values(motif_counts(g))) fv.values.push_back(m);

  if (opts.include_max_aggregates) {
    for (const auto& nv : aggregate_by_kind(table, g, Aggregation::Max)) {
      fv.names.push_back("max_" + nv.name);
      fv.values.push_back(nv.value);
    }
  }
  return fv;
}

// ---------------------------------------------------------------------------
// Feature groups.

enum class FeatureSetId {
  Structural,
  TypeDifferentiated,
  DropperOnly,
  CloneOnly,
  ProbeOnly,
  IpLocalityOnly,
  AllSecurity,
  All,
};

inline constexpr FeatureSetId kAllFeatureSets[] = {
    FeatureSetId::Structural, FeatureSetId::TypeDifferentiated, FeatureSetId::DropperOnly,
    FeatureSetId::CloneOnly,  FeatureSetId::ProbeOnly,          FeatureSetId::IpLocalityOnly,
    FeatureSetId::AllSecurity, FeatureSetId::All};

inline std::string_view to_string(FeatureSetId s) {
  switch (s) {
    case FeatureSetId::Structural: return "structural";
    case FeatureSetId::TypeDifferentiated: return "type-differentiated";
    case FeatureSetId::DropperOnly: return "dropper";
    case FeatureSetId::CloneOnly: return "clone";
    case FeatureSetId::ProbeOnly: return "probe";
    case FeatureSetId::IpLocalityOnly: return "ip-locality";
    case FeatureSetId::AllSecurity: return "all-security";
    case FeatureSetId::All: return "all";
  }
  return "?";
}

inline FeatureSetId parse_feature_set(std::string_view s) {
  for (FeatureSetId id : kAllFeatureSets)
    if (to_string(id) == s) return id;
  throw UsageError("unknown feature set '" + std::string(s) + "'");
}

// Names in canonical order. n_nodes and n_edges are part of every group; the
// type-aware group also owns the per-kind and per-op counts.
inline std::vector<std::string> feature_set_names(FeatureSetId set) {
  const auto& all = canonical_feature_names();
  auto in_range = [&](std::size_t lo, std::size_t hi) {
    return std::vector<std::string>(all.begin() + static_cast<long>(lo), all.begin() + static_cast<long>(hi));
  };
  std::vector<std::string> out = {"n_nodes", "n_edges"};
  auto append = [&](std::vector<std::string> more) { out.insert(out.end(), more.begin(), more.end()); };
  switch (set) {
    case FeatureSetId::Structural: append(in_range(12, 18)); break;
    case FeatureSetId::TypeDifferentiated:
      append(in_range(2, 12));
      append(in_range(18, 36));
      break;
    case FeatureSetId::DropperOnly: out.emplace_back("dropper_triangles"); break;
    case FeatureSetId::CloneOnly: out.emplace_back("clone_triangles"); break;
    case FeatureSetId::ProbeOnly: out.emplace_back("probe_triangles"); break;
    case FeatureSetId::IpLocalityOnly: append(in_range(39, 45)); break;
    case FeatureSetId::AllSecurity: append(in_range(36, 45)); break;
    case FeatureSetId::All: return all;
  }
  return out;
}

inline FeatureVector project(const FeatureVector& v, const std::vector<std::string>& names) {
  FeatureVector out;
  out.graph_id = v.graph_id;
  out.label = v.label;
  out.names = names;
  out.values.reserve(names.size());
  for (const auto& n : names) out.values.push_back(v.at(n));
  return out;
}

inline FeatureVector project(const FeatureVector& v, FeatureSetId set) {
  return project(v, feature_set_names(set));
}

// ---------------------------------------------------------------------------
// Feature matrix CSV: graph_id,label,<names...>

inline void write_feature_csv(std::ostream& out, const std::vector<FeatureVector>& rows,
                              const std::vector<std::string>& names = canonical_feature_names()) {
  std::vector<std::string> header = {"graph_id", "label"};
  header.insert(header.end(), names.begin(), names.end());
  out << csv::join(header) << '\n';
  for (const auto& r : rows) {
    std::vector<std::string> fields = {r.graph_id, r.label.value_or("")};
    for (const auto& n : names) fields.push_back(csv::format_double(r.at(n)));
    out << csv::join(fields) << '\n';
  }
}

inline std::string feature_csv(const std::vector<FeatureVector>& rows) {
  std::ostringstream ss;
  write_feature_csv(ss, rows);
  return ss.str();
}

inline std::vector<FeatureVector> read_feature_csv(std::istream& in) {
  auto rows = csv::read_all(in);
  if (rows.empty()) throw DataError("feature CSV is empty");
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "graph_id" || header[1] != "label")
    throw DataError("feature CSV header must start with graph_id,label");
  std::vector<std::string> names(header.begin() + 2, header.end());
  std::vector<FeatureVector> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw DataError("feature CSV row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                      " fields, expected " + std::to_string(header.size()));
    FeatureVector fv;
    fv.graph_id = rows[r][0];
    if (!rows[r][1].empty()) fv.label = rows[r][1];
    fv.names = names;
    for (std::size_t i = 2; i < rows[r].size(); ++i) fv.values.push_back(csv::parse_double(rows[r][i]));
    out.push_back(std::move(fv));
  }
  return out;
}

}  // namespace provex
