#pragma once

// Security-domain motifs (dropper / clone / probe triangles) and
// internal-vs-external network locality counts.

#include <arpa/inet.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "provex/graph.hpp"

namespace provex {

// Distinct relations between node indices extracted from a graph's events,
// with Read/Exec normalized to (process, file) regardless of how the event
// was written down.
struct MotifRelations {
  std::set<std::pair<std::size_t, std::size_t>> writes;  // (process, file)
  std::set<std::pair<std::size_t, std::size_t>> reads;   // (process, file)
  std::set<std::pair<std::size_t, std::size_t>> execs;   // (process, file)
  std::set<std::pair<std::size_t, std::size_t>> forks;   // (parent, child)

  explicit MotifRelations(const ProvGraph& g) {
    for (const auto& e : g.edges()) {
      auto proc_file = [&] {
        return g.kind(e.src) == NodeKind::Process ? std::pair{e.src, e.dst} : std::pair{e.dst, e.src};
      };
      switch (e.op) {
        case EdgeOp::Write: writes.insert(proc_file()); break;
        case EdgeOp::Read: reads.insert(proc_file()); break;
        case EdgeOp::Exec: execs.insert(proc_file()); break;
        case EdgeOp::Fork: forks.insert({e.src, e.dst}); break;
        default: break;
      }
    }
  }
};

namespace detail {

// Count distinct (P, F, C) with (P, F) in parent_rel, Fork(P -> C), Exec(C, F).
inline std::size_t count_fork_exec_triangles(const std::set<std::pair<std::size_t, std::size_t>>& parent_rel,
                                             const MotifRelations& r) {
  std::size_t count = 0;
  for (const auto& [parent, child] : r.forks) {
    auto lo = parent_rel.lower_bound({parent, 0});
    for (auto it = lo; it != parent_rel.end() && it->first == parent; ++it)
      if (r.execs.contains({child, it->second})) ++count;
  }
  return count;
}

}  // namespace detail

inline std::size_t count_dropper_triangles(const MotifRelations& r) {
  return detail::count_fork_exec_triangles(r.writes, r);
}
inline std::size_t count_clone_triangles(const MotifRelations& r) {
  return detail::count_fork_exec_triangles(r.execs, r);
}
inline std::size_t count_probe_triangles(const MotifRelations& r) {
  return detail::count_fork_exec_triangles(r.reads, r);
}

inline std::size_t count_dropper_triangles(const ProvGraph& g) { return count_dropper_triangles(MotifRelations(g)); }
inline std::size_t count_clone_triangles(const ProvGraph& g) { return count_clone_triangles(MotifRelations(g)); }
inline std::size_t count_probe_triangles(const ProvGraph& g) { return count_probe_triangles(MotifRelations(g)); }

// ---------------------------------------------------------------------------

enum class SocketLocality { Internal, External, Unknown };

inline std::string_view to_string(SocketLocality l) {
  switch (l) {
    case SocketLocality::Internal: return "internal";
    case SocketLocality::External: return "external";
    case SocketLocality::Unknown: return "unknown";
  }
  return "?";
}

namespace detail {

template <std::size_t N>
bool prefix_match(const std::array<std::uint8_t, N>& addr, std::initializer_list<std::uint8_t> net,
                  unsigned bits) {
  auto it = net.begin();
  for (std::size_t i = 0; bits > 0; ++i, ++it) {
    const unsigned take = std::min(bits, 8u);
    const std::uint8_t mask = static_cast<std::uint8_t>(0xFF00u >> take);
    if ((addr[i] & mask) != (*it & mask)) return false;
    bits -= take;
  }
  return true;
}

}  // namespace detail

// Private, loopback and link-local ranges are internal; anything else that
// parses as an address is external.
inline SocketLocality classify_ip(std::string_view ip) {
  std::string s(ip);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  if (s.empty()) return SocketLocality::Unknown;

  std::array<std::uint8_t, 4> v4{};
  if (inet_pton(AF_INET, s.c_str(), v4.data()) == 1) {
    using detail::prefix_match;
    const bool internal = prefix_match(v4, {10}, 8) || prefix_match(v4, {172, 16}, 12) ||
                          prefix_match(v4, {192, 168}, 16) || prefix_match(v4, {127}, 8) ||
                          prefix_match(v4, {169, 254}, 16);
    return internal ? SocketLocality::Internal : SocketLocality::External;
  }
  std::array<std::uint8_t, 16> v6{};
  if (inet_pton(AF_INET6, s.c_str(), v6.data()) == 1) {
    using detail::prefix_match;
    const bool loopback = prefix_match(v6, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}, 128);
    const bool internal = loopback || prefix_match(v6, {0xfc}, 7) || prefix_match(v6, {0xfe, 0x80}, 10);
    return internal ? SocketLocality::Internal : SocketLocality::External;
  }
  return SocketLocality::Unknown;
}

inline SocketLocality classify_socket(const ProvNode& node) {
  const std::string* ip = node.attr("ip");
  return ip ? classify_ip(*ip) : SocketLocality::Unknown;
}

struct MotifCounts {
  std::size_t dropper_triangles = 0;
  std::size_t clone_triangles = 0;
  std::size_t probe_triangles = 0;
  std::size_t internal_socket_writes = 0;
  std::size_t external_socket_writes = 0;
  std::size_t internal_socket_reads = 0;
  std::size_t external_socket_reads = 0;
  std::size_t internal_sockets = 0;
  std::size_t external_sockets = 0;

  bool operator==(const MotifCounts&) const = default;
};

inline constexpr std::array<const char*, 9> kMotifFeatureNames = {
    "dropper_triangles",      "clone_triangles",        "probe_triangles",
    "internal_socket_writes", "external_socket_writes", "internal_socket_reads",
    "external_socket_reads",  "internal_sockets",       "external_sockets"};

// Send/Connect count as writes, Recv as reads. Unknown sockets are excluded.
// Only the locality fields of the result are filled.
inline MotifCounts socket_locality_counts(const ProvGraph& g) {
  MotifCounts m;
  std::vector<SocketLocality> loc(g.node_count(), SocketLocality::Unknown);
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    if (g.kind(v) != NodeKind::Socket) continue;
    loc[v] = classify_socket(g.nodes()[v]);
    if (loc[v] == SocketLocality::Internal) ++m.internal_sockets;
    if (loc[v] == SocketLocality::External) ++m.external_sockets;
  }
  for (const auto& e : g.edges()) {
    if (e.op != EdgeOp::Send && e.op != EdgeOp::Connect && e.op != EdgeOp::Recv) continue;
    const std::size_t sock = g.kind(e.src) == NodeKind::Socket ? e.src : e.dst;
    const bool write = e.op != EdgeOp::Recv;
    switch (loc[sock]) {
      case SocketLocality::Internal: ++(write ? m.internal_socket_writes : m.internal_socket_reads); break;
      case SocketLocality::External: ++(write ? m.external_socket_writes : m.external_socket_reads); break;
      case SocketLocality::Unknown: break;
    }
  }
  return m;
}

inline MotifCounts motif_counts(const ProvGraph& g) {
  MotifCounts m = socket_locality_counts(g);
  const MotifRelations r(g);
  m.dropper_triangles = count_dropper_triangles(r);
  m.clone_triangles = count_clone_triangles(r);
  m.probe_triangles = count_probe_triangles(r);
  return m;
}

inline std::array<double, 9> motif_values(const MotifCounts& m) {
  return {static_cast<double>(m.dropper_triangles),      static_cast<double>(m.clone_triangles),
          static_cast<double>(m.probe_triangles),        static_cast<double>(m.internal_socket_writes),
          static_cast<double>(m.external_socket_writes), static_cast<double>(m.internal_socket_reads),
          static_cast<double>(m.external_socket_reads),  static_cast<double>(m.internal_sockets),
          static_cast<double>(m.external_sockets)};
}

}  // namespace provex
