#pragma once

// Synthetic provenance corpora built from behavioral archetypes. Each
// template's motif signature is exact per graph, not just in expectation.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "provex/csv.hpp"
#include "provex/error.hpp"
#include "provex/graph.hpp"
#include "provex/rng.hpp"
#include "provex/security.hpp"

namespace provex {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct Template {
  std::string name;    // archetype, selects the generator
  std::string label;   // class label written on every graph
  std::string family;  // finer-grained tag, kept in the manifest
  std::map<std::string, IntRange> ranges;
  std::map<std::string, double> probabilities;
  double noise_max = 0.10;  // extra benign edges, as a fraction of edges

  int draw(Rng& rng, const std::string& key) const {
    auto it = ranges.find(key);
    if (it == ranges.end()) throw std::logic_error("template '" + name + "' has no range '" + key + "'");
    return rng.between(it->second.lo, it->second.hi);
  }
  double probability(const std::string& key) const {
    auto it = probabilities.find(key);
    return it == probabilities.end() ? 0.0 : it->second;
  }
  // Pins a range to one value.
  Template& force(const std::string& key, int value) {
    ranges[key] = {value, value};
    return *this;
  }
};

inline const std::vector<std::string>& template_names() {
  static const std::vector<std::string> names = {
      "benign-flower", "benign-chain",  "benign-writer",  "benign-pool",
      "dropper-chain", "ddos-internal", "ddos-external", "clone-probe-storm"};
  return names;
}

inline Template make_template(std::string_view name) {
  Template t;
  t.name = std::string(name);
  t.family = t.name;
  t.label = "benign";
  if (name == "benign-flower") {
    t.ranges = {{"reads", {10, 40}}, {"log_writes", {1, 2}}};
  } else if (name == "benign-chain") {
    t.ranges = {{"chain_length", {2, 5}}, {"reads", {3, 10}}, {"writes", {0, 2}}};
    t.probabilities = {{"shared_lock", 0.5}};
  } else if (name == "benign-writer") {
    t.ranges = {{"workers", {0, 1}}, {"writes", {10, 40}}, {"reads", {1, 4}}};
  } else if (name == "benign-pool") {
    t.ranges = {{"workers", {2, 6}}, {"reads", {2, 6}}};
  } else if (name == "dropper-chain") {
    t.label = "malicious";
    t.ranges = {{"chain_length", {2, 5}}, {"dll_reads", {1, 5}}, {"temp_writes", {1, 3}}};
  } else if (name == "ddos-internal") {
    t.label = "malicious";
    t.ranges = {{"children", {5, 15}}, {"sends", {2, 6}}, {"dll_reads", {1, 4}}};
  } else if (name == "ddos-external") {
    t.label = "malicious";
    t.ranges = {{"children", {5, 15}}, {"sends", {5, 10}}, {"dll_reads", {1, 4}}};
  } else if (name == "clone-probe-storm") {
    t.label = "malicious";
    t.ranges = {{"probe_rounds", {20, 60}}, {"clone_rounds", {1, 5}}, {"dll_reads", {1, 4}}};
  } else {
    throw UsageError("unknown template '" + std::string(name) + "'");
  }
  return t;
}

// What a template promises about every graph it emits.
struct MotifSignature {
  std::optional<std::size_t> dropper, clone, probe, external_socket_writes;
};

struct CorpusEntry {
  ProvGraph graph;
  std::string family;
  MotifSignature expected;
};

namespace detail {

class SynthGraph {
 public:
  SynthGraph(std::string id, Rng& rng) : b_(std::move(id)), rng_(rng) {}

  std::size_t proc(std::string_view image) {
    return b_.process("p" + std::to_string(np_++), std::string(image));
  }
  std::size_t file(std::string_view path) {
    const std::string id = "f" + std::to_string(nf_++);
    return b_.file(id, std::string(path) + (path.back() == '/' ? id : ""));
  }
  std::size_t sock(std::string ip) {
    return b_.socket("s" + std::to_string(ns_++), std::move(ip), std::to_string(rng_.between(1024, 65535)));
  }
  void ev(std::size_t a, std::size_t b, EdgeOp op) { b_.edge(a, b, op, ts_++); }

  // Fraction-of-edges worth of reads/writes to fresh files from random
  // processes. Fresh files are never executed, so no motif can form.
  void add_noise(double fraction) {
    std::vector<std::size_t> procs;
    for (std::size_t v = 0; v < b_.node_count(); ++v)
      if (b_.node(v).kind == NodeKind::Process) procs.push_back(v);
    const auto extra = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(b_.edge_count())));
    for (std::size_t k = 0; k < extra && !procs.empty(); ++k) {
      const std::size_t p = procs[rng_.below(procs.size())];
      if (rng_.chance(0.5)) ev(p, file("/usr/share/misc/"), EdgeOp::Read);
      else ev(p, file("/var/log/"), EdgeOp::Write);
    }
  }

  GraphBuilder& builder() { return b_; }

 private:
  GraphBuilder b_;
  Rng& rng_;
  std::size_t np_ = 0, nf_ = 0, ns_ = 0;
  std::int64_t ts_ = 0;
};

inline std::string internal_ip(Rng& rng) {
  if (rng.chance(0.5)) return "10." + std::to_string(rng.between(0, 255)) + "." + std::to_string(rng.between(0, 255)) + "." + std::to_string(rng.between(1, 254));
  return "192.168." + std::to_string(rng.between(0, 255)) + "." + std::to_string(rng.between(1, 254));
}

inline std::string external_ip(Rng& rng) {
  static constexpr int kFirstOctets[] = {8, 23, 45, 52, 81, 104, 151, 185, 203};
  const int first = kFirstOctets[rng.below(std::size(kFirstOctets))];
  return std::to_string(first) + "." + std::to_string(rng.between(0, 255)) + "." + std::to_string(rng.between(0, 255)) + "." + std::to_string(rng.between(1, 254));
}

inline MotifSignature build_archetype(const Template& t, SynthGraph& g, Rng& rng) {
  MotifSignature sig;
  const std::string& a = t.name;
  if (a == "benign-flower") {
    const std::size_t p = g.proc("/usr/bin/updatedb");
    for (int i = 0, n = t.draw(rng, "reads"); i < n; ++i) g.ev(p, g.file("/usr/lib/"), EdgeOp::Read);
    for (int i = 0, n = t.draw(rng, "log_writes"); i < n; ++i) g.ev(p, g.file("/var/log/"), EdgeOp::Write);
    sig = {0, 0, 0, 0};
  } else if (a == "benign-chain") {
    const int len = t.draw(rng, "chain_length");
    const bool lock = rng.chance(t.probability("shared_lock"));
    const std::size_t lock_file = lock ? g.file("/run/lock/") : 0;
    std::size_t prev = 0;
    for (int i = 0; i < len; ++i) {
      const std::size_t p = g.proc("/usr/bin/stage" + std::to_string(i));
      if (i > 0) g.ev(prev, p, EdgeOp::Fork);
      g.ev(p, g.file("/usr/bin/stage" + std::to_string(i)), EdgeOp::Exec);
      for (int r = 0, n = t.draw(rng, "reads"); r < n; ++r) g.ev(p, g.file("/usr/lib/"), EdgeOp::Read);
      for (int w = 0, n = t.draw(rng, "writes"); w < n; ++w) g.ev(p, g.file("/tmp/out/"), EdgeOp::Write);
      if (lock) g.ev(p, lock_file, EdgeOp::Write);
      prev = p;
    }
    sig = {0, 0, 0, 0};
  } else if (a == "benign-writer") {
    const std::size_t root = g.proc("/usr/bin/logrotate");
    std::vector<std::size_t> procs = {root};
    for (int i = 0, n = t.draw(rng, "workers"); i < n; ++i) {
      const std::size_t c = g.proc("/usr/bin/gzip");
      g.ev(root, c, EdgeOp::Fork);
      procs.push_back(c);
    }
    for (int r = 0, n = t.draw(rng, "reads"); r < n; ++r) g.ev(root, g.file("/etc/"), EdgeOp::Read);
    for (int w = 0, n = t.draw(rng, "writes"); w < n; ++w)
      g.ev(procs[rng.below(procs.size())], g.file("/var/log/archive/"), EdgeOp::Write);
    sig = {0, 0, 0, 0};
  } else if (a == "benign-pool") {
    const std::size_t master = g.proc("/usr/sbin/httpd");
    const std::size_t config = g.file("/etc/httpd.conf");
    const std::size_t log = g.file("/var/log/httpd.log");
    g.ev(master, config, EdgeOp::Read);
    g.ev(master, log, EdgeOp::Write);
    for (int i = 0, n = t.draw(rng, "workers"); i < n; ++i) {
      const std::size_t w = g.proc("/usr/sbin/httpd");
      g.ev(master, w, EdgeOp::Fork);
      g.ev(w, config, EdgeOp::Read);
      g.ev(w, log, EdgeOp::Write);
      for (int r = 0, m = t.draw(rng, "reads"); r < m; ++r) g.ev(w, g.file("/srv/www/"), EdgeOp::Read);
    }
    sig = {0, 0, 0, 0};
  } else if (a == "dropper-chain") {
    const int len = t.draw(rng, "chain_length");
    std::size_t cur = g.proc("C:/Windows/System32/svchost.exe");
    g.ev(cur, g.file("C:/Windows/System32/svchost.exe"), EdgeOp::Exec);
    for (int i = 0; i <= len; ++i) {
      for (int r = 0, n = t.draw(rng, "dll_reads"); r < n; ++r) g.ev(cur, g.file("C:/Windows/System32/"), EdgeOp::Read);
      for (int w = 0, n = t.draw(rng, "temp_writes"); w < n; ++w) g.ev(cur, g.file("C:/Temp/"), EdgeOp::Write);
      if (i == len) break;
      const std::size_t payload = g.file("C:/Users/Public/AppData/");
      g.ev(cur, payload, EdgeOp::Write);
      const std::size_t child = g.proc("C:/Users/Public/AppData/stage.exe");
      g.ev(cur, child, EdgeOp::Fork);
      g.ev(child, payload, EdgeOp::Exec);
      cur = child;
    }
    sig = {static_cast<std::size_t>(len), 0, 0, 0};
  } else if (a == "ddos-internal" || a == "ddos-external") {
    const bool external = a == "ddos-external";
    const std::size_t core = g.proc(external ? "C:/Windows/System32/rundll32.exe" : "C:/Windows/System32/nslookup.exe");
    for (int r = 0, n = t.draw(rng, "dll_reads"); r < n; ++r) g.ev(core, g.file("C:/Windows/System32/"), EdgeOp::Read);
    std::size_t ext_writes = 0;
    for (int c = 0, k = t.draw(rng, "children"); c < k; ++c) {
      const std::size_t child = g.proc(external ? "C:/Windows/System32/rundll32.exe" : "C:/Windows/System32/nslookup.exe");
      g.ev(core, child, EdgeOp::Fork);
      for (int s = 0, m = t.draw(rng, "sends"); s < m; ++s) {
        g.ev(child, g.sock(external ? external_ip(rng) : internal_ip(rng)), EdgeOp::Send);
        ext_writes += external;
      }
    }
    sig = {0, 0, 0, ext_writes};
  } else if (a == "clone-probe-storm") {
    const std::size_t parent = g.proc("C:/Windows/explorer.exe");
    const std::size_t image = g.file("C:/Windows/explorer.exe");
    g.ev(parent, image, EdgeOp::Exec);
    for (int r = 0, n = t.draw(rng, "dll_reads"); r < n; ++r) g.ev(parent, g.file("C:/Windows/System32/"), EdgeOp::Read);
    const int probes = t.draw(rng, "probe_rounds");
    for (int i = 0; i < probes; ++i) {
      const std::size_t copy = g.file("C:/ProgramData/");
      g.ev(parent, copy, EdgeOp::Read);
      const std::size_t child = g.proc("C:/ProgramData/explorer.exe");
      g.ev(parent, child, EdgeOp::Fork);
      g.ev(child, copy, EdgeOp::Exec);
    }
    const int clones = t.draw(rng, "clone_rounds");
    for (int i = 0; i < clones; ++i) {
      const std::size_t child = g.proc("C:/Windows/explorer.exe");
      g.ev(parent, child, EdgeOp::Fork);
      g.ev(child, image, EdgeOp::Exec);
    }
    sig = {0, static_cast<std::size_t>(clones), static_cast<std::size_t>(probes), 0};
  } else {
    throw UsageError("unknown template '" + a + "'");
  }
  return sig;
}

}  // namespace detail

inline CorpusEntry generate_one(const Template& t, const std::string& graph_id, std::uint64_t seed) {
  Rng rng(seed);
  detail::SynthGraph g(graph_id, rng);
  const MotifSignature sig = detail::build_archetype(t, g, rng);
  const MotifCounts before = motif_counts(g.builder().build());
  if (t.noise_max > 0.0) g.add_noise(rng.unit() * t.noise_max);
  g.builder().label(t.label);
  ProvGraph graph = g.builder().build();
  const MotifCounts after = motif_counts(graph);
  if (!(before == after)) throw std::logic_error("noise edges changed motif counts in " + graph_id);
  return {std::move(graph), t.family, sig};
}

// `count` graphs named <id_prefix or template name>-NNNN. Graph i uses a
// child seed derived from (seed, template name, i).
inline std::vector<CorpusEntry> generate(const Template& t, std::size_t count, std::uint64_t seed,
                                         std::string id_prefix = {}) {
  if (count < 1) throw UsageError("generate: count must be >= 1");
  if (id_prefix.empty()) id_prefix = t.name;
  std::vector<CorpusEntry> out;
  out.reserve(count);
  const std::uint64_t base = derive_seed(seed, fnv1a64(t.name));
  for (std::size_t i = 0; i < count; ++i) {
    char num[32];
    std::snprintf(num, sizeof num, "%04zu", i);
    out.push_back(generate_one(t, id_prefix + "-" + num, derive_seed(base, i)));
  }
  return out;
}

// 300 benign (flower + chain) and 300 malicious (dropper, ddos, clone/probe)
// at scale 1.0.
inline std::vector<CorpusEntry> malware_corpus(std::uint64_t seed, double scale = 1.0) {
  auto n = [&](double base) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(base * scale))); };
  std::vector<CorpusEntry> out;
  auto add = [&](std::string_view name, std::size_t count) {
    auto part = generate(make_template(name), count, seed);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  };
  add("benign-flower", n(150));
  add("benign-chain", n(150));
  add("dropper-chain", n(100));
  add("ddos-internal", n(50));
  add("ddos-external", n(50));
  add("clone-probe-storm", n(100));
  return out;
}

// Four benign program classes, labelled by template name.
inline std::vector<CorpusEntry> program_corpus(std::uint64_t seed, std::size_t per_class = 100) {
  std::vector<CorpusEntry> out;
  for (const char* name : {"benign-flower", "benign-chain", "benign-writer", "benign-pool"}) {
    Template t = make_template(name);
    t.label = name;
    auto part = generate(t, per_class, seed);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// On-disk corpora: one <graph_id>.json per graph plus manifest.csv.

inline std::string split_for(std::string_view graph_id) {
  return fnv1a64(graph_id) % 100 < 80 ? "train" : "test";
}

struct ManifestRow {
  std::string graph_id;
  std::string label;
  std::string family;
  std::string split;
};

inline std::vector<ManifestRow> export_corpus(const std::vector<CorpusEntry>& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<ManifestRow> manifest;
  std::ostringstream csv_text;
  csv_text << "graph_id,label,family,split\n";
  for (const auto& e : corpus) {
    save_graph(e.graph, dir / (e.graph.graph_id() + ".json"));
    ManifestRow row{e.graph.graph_id(), e.graph.label().value_or(""), e.family, split_for(e.graph.graph_id())};
    csv_text << csv::join({row.graph_id, row.label, row.family, row.split}) << '\n';
    manifest.push_back(std::move(row));
  }
  write_text_file(dir / "manifest.csv", csv_text.str());
  return manifest;
}

struct LoadedCorpus {
  std::vector<ProvGraph> graphs;
  std::vector<ManifestRow> manifest;  // aligned with graphs

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& g : graphs) {
      if (!g.label()) throw DataError("graph '" + g.graph_id() + "' has no label");
      out.push_back(*g.label());
    }
    return out;
  }
};

// Reads manifest order when a manifest exists, otherwise every *.json in
// lexicographic order. Manifest labels fill in graphs stored without one.
inline LoadedCorpus load_corpus(const std::filesystem::path& dir, const LoadOptions& opts = {}) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  LoadedCorpus c;
  const auto manifest_path = dir / "manifest.csv";
  if (std::filesystem::exists(manifest_path)) {
    std::istringstream in(read_text_file(manifest_path));
    auto rows = csv::read_all(in);
    if (rows.empty()) throw DataError("empty manifest");
    const auto& header = rows.front();
    auto col = [&](std::string_view name) -> std::optional<std::size_t> {
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
      return std::nullopt;
    };
    const auto id_col = col("graph_id");
    if (!id_col) throw DataError("manifest has no graph_id column");
    const auto label_col = col("label"), family_col = col("family"), split_col = col("split");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != header.size()) throw DataError("manifest row " + std::to_string(r) + " has wrong width");
      ManifestRow m{row[*id_col], label_col ? row[*label_col] : "", family_col ? row[*family_col] : "",
                    split_col ? row[*split_col] : ""};
      ProvGraph g = load_graph(dir / (m.graph_id + ".json"), opts);
      if (g.graph_id() != m.graph_id) throw DataError("manifest id '" + m.graph_id + "' does not match file content");
      if (!g.label() && !m.label.empty()) g = g.with_label(m.label);
      if (m.label.empty() && g.label()) m.label = *g.label();
      c.graphs.push_back(std::move(g));
      c.manifest.push_back(std::move(m));
    }
  } else {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ProvGraph g = load_graph(f, opts);
      c.manifest.push_back({g.graph_id(), g.label().value_or(""), "", split_for(g.graph_id())});
      c.graphs.push_back(std::move(g));
    }
  }
  return c;
}

}  // namespace provex
