#pragma once

// Typed provenance graphs: processes, files and sockets connected by
// syscall-level events, plus the JSON file format and the information-flow
// orientation every feature is computed on.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "provex/error.hpp"

namespace provex {

enum class NodeKind : std::uint8_t { Process, File, Socket };
enum class EdgeOp : std::uint8_t { Read, Write, Exec, Fork, Send, Recv, Connect };

inline constexpr std::size_t kNodeKindCount = 3;
inline constexpr std::size_t kEdgeOpCount = 7;
inline constexpr NodeKind kAllKinds[] = {NodeKind::Process, NodeKind::File, NodeKind::Socket};
inline constexpr EdgeOp kAllOps[] = {EdgeOp::Read, EdgeOp::Write, EdgeOp::Exec, EdgeOp::Fork,
                                     EdgeOp::Send, EdgeOp::Recv,  EdgeOp::Connect};

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Process: return "process";
    case NodeKind::File: return "file";
    case NodeKind::Socket: return "socket";
  }
  return "?";
}

inline std::string_view to_string(EdgeOp op) {
  switch (op) {
    case EdgeOp::Read: return "read";
    case EdgeOp::Write: return "write";
    case EdgeOp::Exec: return "exec";
    case EdgeOp::Fork: return "fork";
    case EdgeOp::Send: return "send";
    case EdgeOp::Recv: return "recv";
    case EdgeOp::Connect: return "connect";
  }
  return "?";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view s) {
  for (NodeKind k : kAllKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::optional<EdgeOp> parse_edge_op(std::string_view s) {
  for (EdgeOp op : kAllOps)
    if (to_string(op) == s) return op;
  return std::nullopt;
}

struct ProvNode {
  std::string id;
  NodeKind kind = NodeKind::Process;
  std::map<std::string, std::string> attrs;

  const std::string* attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : &it->second;
  }

  bool operator==(const ProvNode&) const = default;
};

// Endpoints are indices into ProvGraph::nodes(); the file format uses ids.
struct ProvEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  EdgeOp op = EdgeOp::Read;
  std::optional<std::int64_t> ts;

  bool operator==(const ProvEdge&) const = default;
};

// True when (op, src kind, dst kind) is a legal event. Read/Write/Exec and the
// socket ops accept their two endpoints in either order; Fork is parent->child.
inline bool op_accepts(EdgeOp op, NodeKind a, NodeKind b) {
  auto pair_of = [&](NodeKind x, NodeKind y) {
    return (a == x && b == y) || (a == y && b == x);
  };
  switch (op) {
    case EdgeOp::Read:
    case EdgeOp::Write:
    case EdgeOp::Exec:
      return pair_of(NodeKind::Process, NodeKind::File);
    case EdgeOp::Fork:
      return a == NodeKind::Process && b == NodeKind::Process;
    case EdgeOp::Send:
    case EdgeOp::Recv:
    case EdgeOp::Connect:
      return pair_of(NodeKind::Process, NodeKind::Socket);
  }
  return false;
}

struct LoadOptions {
  // Reject graphs with more nodes/edges than this. Off by default.
  std::optional<std::size_t> max_nodes;
  std::optional<std::size_t> max_edges;
};

class ProvGraph {
 public:
  ProvGraph() = default;

  // Validates every invariant; throws DataError naming the offending index.
  ProvGraph(std::string graph_id, std::optional<std::string> label, std::vector<ProvNode> nodes,
            std::vector<ProvEdge> edges, const LoadOptions& opts = {})
      : graph_id_(std::move(graph_id)),
        label_(std::move(label)),
        nodes_(std::move(nodes)),
        edges_(std::move(edges)) {
    if (opts.max_nodes && nodes_.size() > *opts.max_nodes)
      throw DataError("graph '" + graph_id_ + "' exceeds node cap (" +
                      std::to_string(nodes_.size()) + " > " + std::to_string(*opts.max_nodes) + ")");
    if (opts.max_edges && edges_.size() > *opts.max_edges)
      throw DataError("graph '" + graph_id_ + "' exceeds edge cap (" +
                      std::to_string(edges_.size()) + " > " + std::to_string(*opts.max_edges) + ")");
    index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].id.empty()) throw DataError("empty node id at node " + std::to_string(i));
      if (!index_.emplace(nodes_[i].id, i).second)
        throw DataError("duplicate node id '" + nodes_[i].id + "' at node " + std::to_string(i));
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& edge = edges_[e];
      if (edge.src >= nodes_.size() || edge.dst >= nodes_.size())
        throw DataError("dangling endpoint at edge " + std::to_string(e));
      if (edge.src == edge.dst) throw DataError("self-loop at edge " + std::to_string(e));
      if (!op_accepts(edge.op, nodes_[edge.src].kind, nodes_[edge.dst].kind))
        throw DataError("op/kind mismatch at edge " + std::to_string(e));
    }
  }

  const std::string& graph_id() const { return graph_id_; }
  const std::optional<std::string>& label() const { return label_; }
  const std::vector<ProvNode>& nodes() const { return nodes_; }
  const std::vector<ProvEdge>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  NodeKind kind(std::size_t v) const { return nodes_[v].kind; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  ProvGraph with_label(std::optional<std::string> label) const {
    ProvGraph copy = *this;
    copy.label_ = std::move(label);
    return copy;
  }

  friend bool operator==(const ProvGraph& a, const ProvGraph& b) {
    return a.graph_id_ == b.graph_id_ && a.label_ == b.label_ && a.nodes_ == b.nodes_ &&
           a.edges_ == b.edges_;
  }

 private:
  std::string graph_id_;
  std::optional<std::string> label_;
  std::vector<ProvNode> nodes_;
  std::vector<ProvEdge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Incremental construction by id, used by the generator and tests.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::string graph_id) : graph_id_(std::move(graph_id)) {}

  std::size_t add_node(std::string id, NodeKind kind, std::map<std::string, std::string> attrs = {}) {
    nodes_.push_back({std::move(id), kind, std::move(attrs)});
    return nodes_.size() - 1;
  }
  std::size_t process(std::string id, std::string image = {}) {
    std::map<std::string, std::string> attrs;
    if (!image.empty()) attrs["image"] = std::move(image);
    return add_node(std::move(id), NodeKind::Process, std::move(attrs));
  }
  std::size_t file(std::string id, std::string path = {}) {
    std::map<std::string, std::string> attrs;
    if (!path.empty()) attrs["path"] = std::move(path);
    return add_node(std::move(id), NodeKind::File, std::move(attrs));
  }
  std::size_t socket(std::string id, std::string ip = {}, std::string port = {}) {
    std::map<std::string, std::string> attrs;
    if (!ip.empty()) attrs["ip"] = std::move(ip);
    if (!port.empty()) attrs["port"] = std::move(port);
    return add_node(std::move(id), NodeKind::Socket, std::move(attrs));
  }

  GraphBuilder& edge(std::size_t src, std::size_t dst, EdgeOp op,
                     std::optional<std::int64_t> ts = std::nullopt) {
    edges_.push_back({src, dst, op, ts});
    return *this;
  }

  // Convenience wrappers in the natural "subject verb object" order.
  GraphBuilder& read(std::size_t proc, std::size_t file) { return edge(proc, file, EdgeOp::Read); }
  GraphBuilder& write(std::size_t proc, std::size_t file) { return edge(proc, file, EdgeOp::Write); }
  GraphBuilder& exec(std::size_t proc, std::size_t file) { return edge(proc, file, EdgeOp::Exec); }
  GraphBuilder& fork(std::size_t parent, std::size_t child) { return edge(parent, child, EdgeOp::Fork); }
  GraphBuilder& send(std::size_t proc, std::size_t sock) { return edge(proc, sock, EdgeOp::Send); }
  GraphBuilder& recv(std::size_t proc, std::size_t sock) { return edge(proc, sock, EdgeOp::Recv); }
  GraphBuilder& connect(std::size_t proc, std::size_t sock) { return edge(proc, sock, EdgeOp::Connect); }

  GraphBuilder& label(std::string l) {
    label_ = std::move(l);
    return *this;
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const ProvNode& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<ProvEdge>& edges() const { return edges_; }
  void pop_edge() { edges_.pop_back(); }

  ProvGraph build() const { return ProvGraph(graph_id_, label_, nodes_, edges_); }

 private:
  std::string graph_id_;
  std::optional<std::string> label_;
  std::vector<ProvNode> nodes_;
  std::vector<ProvEdge> edges_;
};

// ---------------------------------------------------------------------------
// Information-flow orientation.

struct Arc {
  std::size_t from = 0;
  std::size_t to = 0;
  EdgeOp op = EdgeOp::Read;
  bool operator==(const Arc&) const = default;
};

// Direction of information flow for one event. Reads and execs flow out of
// the file, writes into it, forks from parent to child, sends and connects
// out of the process, receives into it.
inline Arc orient(EdgeOp op, std::size_t src, NodeKind src_kind, std::size_t dst) {
  auto flow = [&](NodeKind source_kind) {
    return src_kind == source_kind ? Arc{src, dst, op} : Arc{dst, src, op};
  };
  switch (op) {
    case EdgeOp::Read:
    case EdgeOp::Exec:
      return flow(NodeKind::File);
    case EdgeOp::Write:
    case EdgeOp::Send:
    case EdgeOp::Connect:
      return flow(NodeKind::Process);
    case EdgeOp::Fork:
      return Arc{src, dst, op};
    case EdgeOp::Recv:
      return flow(NodeKind::Socket);
  }
  return Arc{src, dst, op};
}

// Directed multigraph view: one arc per event, parallel arcs kept.
class DirectedAdjacency {
 public:
  DirectedAdjacency() = default;
  DirectedAdjacency(std::size_t n, std::vector<Arc> arcs) : n_(n), arcs_(std::move(arcs)) {
    out_.assign(n_, {});
    in_.assign(n_, {});
    for (const Arc& a : arcs_) {
      out_[a.from].push_back(a.to);
      in_[a.to].push_back(a.from);
    }
  }

  std::size_t node_count() const { return n_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  // Multi-neighbor lists; a neighbor appears once per parallel arc.
  const std::vector<std::size_t>& out(std::size_t v) const { return out_[v]; }
  const std::vector<std::size_t>& in(std::size_t v) const { return in_[v]; }

  // Successor lists with parallel arcs collapsed, sorted ascending.
  std::vector<std::vector<std::size_t>> simple_out() const {
    std::vector<std::vector<std::size_t>> s(n_);
    for (std::size_t v = 0; v < n_; ++v) {
      s[v] = out_[v];
      std::sort(s[v].begin(), s[v].end());
      s[v].erase(std::unique(s[v].begin(), s[v].end()), s[v].end());
    }
    return s;
  }

  bool operator==(const DirectedAdjacency& o) const { return n_ == o.n_ && arcs_ == o.arcs_; }

 private:
  std::size_t n_ = 0;
  std::vector<Arc> arcs_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

inline DirectedAdjacency orient_edges(const ProvGraph& g) {
  std::vector<Arc> arcs;
  arcs.reserve(g.edge_count());
  for (const auto& e : g.edges()) arcs.push_back(orient(e.op, e.src, g.kind(e.src), e.dst));
  return DirectedAdjacency(g.node_count(), std::move(arcs));
}

// Simple undirected graph: direction and multiplicity dropped, no self-loops.
struct UndirectedAdjacency {
  std::vector<std::vector<std::size_t>> neighbors;  // sorted, unique

  std::size_t node_count() const { return neighbors.size(); }
  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (const auto& n : neighbors) twice += n.size();
    return twice / 2;
  }
  bool adjacent(std::size_t a, std::size_t b) const {
    return std::binary_search(neighbors[a].begin(), neighbors[a].end(), b);
  }
};

inline UndirectedAdjacency undirected_projection(const ProvGraph& g) {
  UndirectedAdjacency u;
  u.neighbors.assign(g.node_count(), {});
  for (const auto& e : g.edges()) {
    if (e.src == e.dst) continue;
    u.neighbors[e.src].push_back(e.dst);
    u.neighbors[e.dst].push_back(e.src);
  }
  for (auto& n : u.neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return u;
}

// ---------------------------------------------------------------------------
// JSON format.

inline nlohmann::ordered_json to_json(const ProvGraph& g) {
  nlohmann::ordered_json j;
  j["graph_id"] = g.graph_id();
  j["label"] = g.label() ? nlohmann::ordered_json(*g.label()) : nlohmann::ordered_json(nullptr);
  auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes()) {
    nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
    for (const auto& [k, v] : n.attrs) attrs[k] = v;
    nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"attrs", std::move(attrs)}});
  }
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges()) {
    edges.push_back({{"src", g.nodes()[e.src].id},
                     {"dst", g.nodes()[e.dst].id},
                     {"op", to_string(e.op)},
                     {"ts", e.ts ? nlohmann::ordered_json(*e.ts) : nlohmann::ordered_json(nullptr)}});
  }
  return j;
}

// One line of compact JSON, no trailing newline.
inline std::string serialize_graph(const ProvGraph& g) { return to_json(g).dump(); }

inline ProvGraph graph_from_json(const nlohmann::json& j, const LoadOptions& opts = {}) {
  auto fail = [](const std::string& what) -> DataError { return DataError(what); };
  if (!j.is_object()) throw fail("graph document is not a JSON object");
  try {
    std::string graph_id = j.at("graph_id").get<std::string>();
    std::optional<std::string> label;
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) label = it->get<std::string>();

    std::vector<ProvNode> nodes;
    std::unordered_map<std::string, std::size_t> index;
    const auto& jn = j.at("nodes");
    if (!jn.is_array()) throw fail("'nodes' is not an array");
    nodes.reserve(jn.size());
    for (std::size_t i = 0; i < jn.size(); ++i) {
      const auto& n = jn[i];
      ProvNode node;
      node.id = n.at("id").get<std::string>();
      auto kind = parse_node_kind(n.at("kind").get<std::string>());
      if (!kind) throw fail("unknown node kind at node " + std::to_string(i));
      node.kind = *kind;
      if (auto it = n.find("attrs"); it != n.end() && !it->is_null()) {
        for (auto a = it->begin(); a != it->end(); ++a) node.attrs[a.key()] = a.value().get<std::string>();
      }
      index.emplace(node.id, i);
      nodes.push_back(std::move(node));
    }

    std::vector<ProvEdge> edges;
    const auto& je = j.at("edges");
    if (!je.is_array()) throw fail("'edges' is not an array");
    edges.reserve(je.size());
    for (std::size_t e = 0; e < je.size(); ++e) {
      const auto& ed = je[e];
      auto src = index.find(ed.at("src").get<std::string>());
      auto dst = index.find(ed.at("dst").get<std::string>());
      if (src == index.end() || dst == index.end())
        throw fail("dangling endpoint at edge " + std::to_string(e));
      auto op = parse_edge_op(ed.at("op").get<std::string>());
      if (!op) throw fail("unknown op at edge " + std::to_string(e));
      std::optional<std::int64_t> ts;
      if (auto it = ed.find("ts"); it != ed.end() && !it->is_null()) ts = it->get<std::int64_t>();
      edges.push_back({src->second, dst->second, *op, ts});
    }
    return ProvGraph(std::move(graph_id), std::move(label), std::move(nodes), std::move(edges), opts);
  } catch (const nlohmann::json::exception& ex) {
    throw fail(std::string("malformed graph: ") + ex.what());
  }
}

inline ProvGraph parse_graph(std::string_view text, const LoadOptions& opts = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw DataError(std::string("parse error: ") + ex.what());
  }
  return graph_from_json(j, opts);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

inline ProvGraph load_graph(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  try {
    return parse_graph(read_text_file(path), opts);
  } catch (const DataError& ex) {
    throw DataError(path.string() + ": " + ex.what());
  }
}

inline void save_graph(const ProvGraph& g, const std::filesystem::path& path) {
  write_text_file(path, to_json(g).dump(2) + "\n");
}

}  // namespace provex
