#pragma once

// Plain-language readings of each graph-level feature, used by `explain`
// to turn a decision path into statements about system behaviour.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "provex/dtree.hpp"
#include "provex/features.hpp"

namespace provex {

struct Gloss {
  std::string meaning;  // what the feature measures
  std::string high;     // reading when the path goes above the threshold
  std::string low;      // reading when it stays at or below
};

namespace detail {

inline std::string kind_noun(std::string_view kind) {
  if (kind == "process") return "processes";
  if (kind == "file") return "files";
  return "sockets";
}

// Glosses for the six per-node measures, specialised per entity kind.
inline std::optional<Gloss> node_measure_gloss(std::string_view kind, std::string_view measure) {
  const std::string who = kind.empty() ? "entities" : kind_noun(kind);
  if (measure == "degree_centrality") {
    if (kind == "process")
      return Gloss{"how many events a typical process takes part in", "processes touch many files, sockets or children",
                   "processes stay with a small working set"};
    if (kind == "file")
      return Gloss{"how many events a typical file is involved in", "files are shared or accessed repeatedly",
                   "files are touched once or twice each"};
    if (kind == "socket")
      return Gloss{"how much traffic a typical socket carries", "sockets are reused for many sends and receives",
                   "each socket carries little traffic"};
    return Gloss{"average event count per entity", "the graph is dense with events", "entities have few events each"};
  }
  if (measure == "closeness_centrality") {
    if (kind == "process")
      return Gloss{"how directly a process is reached from the rest of the activity",
                   "processes sit at the end of long chains of inputs (many reads, ancestors)",
                   "processes receive little upstream data"};
    if (kind == "file")
      return Gloss{"how close a file sits to the processes that produce it", "files are written by busy processes",
                   "files are mostly pre-existing inputs"};
    if (kind == "socket")
      return Gloss{"how reachable a socket is from the process tree", "sockets are fed by well-connected processes",
                   "sockets are written by isolated processes or only read"};
    return Gloss{"average inbound reachability", "information flows converge on a few entities",
                 "flows are short and scattered"};
  }
  if (measure == "betweenness_centrality") {
    if (kind == "process")
      return Gloss{"how often a process relays data between other entities",
                   "processes act as brokers (read, then write or fork onward)", "processes are sinks or sources only"};
    if (kind == "file")
      return Gloss{"how often a file is a hand-off point between processes",
                   "files pass data from one process to another (staging)", "files are not used to hand data over"};
    if (kind == "socket")
      return Gloss{"how often a socket bridges network and host activity", "network input is relayed onward",
                   "socket traffic ends where it starts"};
    return Gloss{"average brokerage across entities", "many entities relay flows", "few relays exist"};
  }
  if (measure == "eigenvector_centrality") {
    return Gloss{"influence of " + who + " inside feedback loops of the graph",
                 who + " take part in cyclic exchanges (e.g. read-write loops)",
                 "the activity is a one-way pipeline with no loops"};
  }
  if (measure == "clustering_triangles") {
    return Gloss{"number of three-way interactions around " + who,
                 who + " share partners with each other (shared files, co-operating processes)",
                 who + " interact in isolated pairs"};
  }
  if (measure == "clustering_coefficient") {
    return Gloss{"how tightly the neighbours of " + who + " are interlinked",
                 "the neighbours of " + who + " also talk to each other",
                 "the neighbourhood of " + who + " is star-shaped"};
  }
  return std::nullopt;
}

inline const std::map<std::string, Gloss, std::less<>>& fixed_glosses() {
  static const std::map<std::string, Gloss, std::less<>> g = {
      {"n_nodes", {"number of entities in the graph", "the run touches many entities", "the run is small"}},
      {"n_edges", {"number of recorded events", "the run produced a lot of activity", "the run produced little activity"}},
      {"n_process", {"number of processes", "the program spawned many processes", "few processes were involved"}},
      {"n_file", {"number of distinct files", "many files were accessed", "few files were accessed"}},
      {"n_socket", {"number of network endpoints", "many remote endpoints were used", "little or no networking"}},
      {"n_read", {"number of file reads", "heavy file input (libraries, configs, data)", "little file input"}},
      {"n_write", {"number of file writes", "heavy file output", "little file output"}},
      {"n_exec", {"number of executions of files", "many programs were launched", "few programs were launched"}},
      {"n_fork", {"number of process creations", "the program creates many children", "few children are created"}},
      {"n_send", {"number of network sends", "much outbound traffic", "little outbound traffic"}},
      {"n_recv", {"number of network receives", "much inbound traffic", "little inbound traffic"}},
      {"n_connect", {"number of connection attempts", "many outbound connections", "few outbound connections"}},
      {"dropper_triangles",
       {"times a process wrote a file that its child then executed",
        "the program stages and runs its own payload (dropper behaviour)", "no self-written file was executed"}},
      {"clone_triangles",
       {"times a parent and its child executed the same file", "the program re-launches its own image (self-replication)",
        "children run different images from their parents"}},
      {"probe_triangles",
       {"times a process read a file that its child later executed",
        "the program inspects binaries before launching them", "launched files were not inspected first"}},
      {"internal_socket_writes",
       {"sends and connects to private or loopback addresses", "heavy traffic towards the local network",
        "little traffic towards the local network"}},
      {"external_socket_writes",
       {"sends and connects to public addresses", "heavy outbound traffic to the internet (e.g. flooding, exfiltration)",
        "little outbound internet traffic"}},
      {"internal_socket_reads",
       {"data received from private or loopback addresses", "the local network feeds the program",
        "nothing received from the local network"}},
      {"external_socket_reads",
       {"data received from public addresses", "the program downloads from the internet",
        "nothing received from the internet"}},
      {"internal_sockets", {"distinct private or loopback endpoints", "many local peers", "few local peers"}},
      {"external_sockets", {"distinct public endpoints", "many internet peers", "few internet peers"}},
  };
  return g;
}

}  // namespace detail

// nullopt for names outside the canonical layout (and its max_ variants).
inline std::optional<Gloss> gloss_for(std::string_view feature) {
  const auto& fixed = detail::fixed_glosses();
  if (auto it = fixed.find(feature); it != fixed.end()) return it->second;
  std::string_view rest = feature;
  bool is_max = false;
  if (rest.starts_with("max_")) {
    rest.remove_prefix(4);
    is_max = true;
  } else if (rest.starts_with("mean_")) {
    auto g = detail::node_measure_gloss("", rest.substr(5));
    if (g) g->meaning += " (all entity kinds together)";
    return g;
  }
  for (std::string_view kind : {"process", "file", "socket"}) {
    if (rest.size() > kind.size() && rest.starts_with(kind) && rest[kind.size()] == '_') {
      auto g = detail::node_measure_gloss(kind, rest.substr(kind.size() + 1));
      if (g && is_max) g->meaning = "largest value over " + detail::kind_noun(kind) + ": " + g->meaning;
      return g;
    }
  }
  return std::nullopt;
}

// One line per rule: "feature > 0.5 (value 3): reading", ending in the leaf label.
inline std::vector<std::string> explain_lines(const DecisionTree& t, const FeatureVector& x) {
  std::vector<std::string> out;
  for (const auto& step : t.decision_path(x)) {
    std::ostringstream s;
    const bool greater = step.direction == Direction::Greater;
    s << step.feature << (greater ? " > " : " <= ") << format_threshold(step.threshold)
      << " (value " << format_threshold(step.value) << ")";
    if (auto g = gloss_for(step.feature)) s << ": " << (greater ? g->high : g->low) << " [" << g->meaning << "]";
    out.push_back(s.str());
  }
  out.push_back("=> " + t.predict(x));
  return out;
}

// Compact path on the first line, then one glossed line per rule.
inline std::string explain(const DecisionTree& t, const FeatureVector& x) {
  std::string s = x.graph_id + ": ";
  for (const auto& step : t.decision_path(x))
    s += step.feature + (step.direction == Direction::Greater ? " > " : " <= ") + format_threshold(step.threshold) +
         " -> ";
  s += t.predict(x) + "\n";
  for (const auto& line : explain_lines(t, x)) s += "  " + line + "\n";
  return s;
}

}  // namespace provex
