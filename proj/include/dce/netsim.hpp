// SPDX-License-Identifier: Apache-2.0
#pragma once

// Star and daisy-chain BBU topologies, hop-by-hop routing into a ledger of
// exchanged real values, and the closed-form cost counts the ledger must
// reproduce.

#include "dce/numerics.hpp"

#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

namespace dce {

enum class TopologyKind { star, chain };

inline std::string to_string(TopologyKind k) { return k == TopologyKind::star ? "star" : "chain"; }

inline TopologyKind parse_topology(const std::string& s) {
  if (s == "star") return TopologyKind::star;
  if (s == "chain" || s == "daisy-chain") return TopologyKind::chain;
  throw InvalidArgument("unknown topology '" + s + "' (expected star or chain)");
}

/// Nodes are numbered 1..M. The aggregation node is M for a star and
/// ceil(M/2) for a chain.
struct Topology {
  TopologyKind kind = TopologyKind::star;
  Index node_count = 1;

  Topology() = default;
  Topology(TopologyKind k, Index m) : kind(k), node_count(m) { require(m >= 1, "topology: node count must be positive"); }

  Index hub() const { return kind == TopologyKind::star ? node_count : (node_count + 1) / 2; }

  bool valid_node(Index m) const { return m >= 1 && m <= node_count; }

  /// Hops between two nodes.
  Index distance(Index a, Index b) const {
    require(valid_node(a) && valid_node(b), "topology: node index out of range");
    if (a == b) return 0;
    if (kind == TopologyKind::chain) return std::abs(a - b);
    // star: leaf-to-leaf traffic relays through the hub
    return (a == hub() || b == hub()) ? 1 : 2;
  }

  /// Undirected physical links.
  std::vector<std::pair<Index, Index>> links() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index m = 1; m <= node_count; ++m) {
      if (kind == TopologyKind::star && m != hub()) out.emplace_back(m, hub());
      if (kind == TopologyKind::chain && m < node_count) out.emplace_back(m, m + 1);
    }
    return out;
  }
};

enum class Phase { uplink, downlink };

inline const char* to_string(Phase p) { return p == Phase::uplink ? "uplink" : "downlink"; }

/// One link traversal: `hop` is the 1-based position along the route.
struct LedgerEntry {
  Phase phase = Phase::uplink;
  Index src = 0;
  Index dst = 0;
  Index hop = 1;
  std::uint64_t real_values = 0;
};

struct CommLedger {
  std::vector<LedgerEntry> entries;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& e : entries) t += e.real_values;
    return t;
  }

  std::uint64_t total(Phase p) const {
    std::uint64_t t = 0;
    for (const auto& e : entries)
      if (e.phase == p) t += e.real_values;
    return t;
  }

  void write_csv(std::ostream& os) const {
    os << "phase,src,dst,hop,real_values\n";
    for (const auto& e : entries)
      os << to_string(e.phase) << ',' << e.src << ',' << e.dst << ',' << e.hop << ',' << e.real_values << '\n';
  }
};

/// Forward a payload from source to destination; every hop carries the full
/// payload.
inline void route(std::uint64_t payload, Index source, Index destination, const Topology& topo, CommLedger& ledger,
                  Phase phase = Phase::uplink) {
  require(topo.valid_node(source) && topo.valid_node(destination), "route: node index out of range");
  if (source == destination) return;
  if (topo.kind == TopologyKind::chain) {
    const Index step = destination > source ? 1 : -1;
    Index hop = 1;
    for (Index at = source; at != destination; at += step)
      ledger.entries.push_back({phase, at, at + step, hop++, payload});
    return;
  }
  if (source == topo.hub() || destination == topo.hub()) {
    ledger.entries.push_back({phase, source, destination, 1, payload});
  } else {
    ledger.entries.push_back({phase, source, topo.hub(), 1, payload});
    ledger.entries.push_back({phase, topo.hub(), destination, 2, payload});
  }
}

/// Per-node multiplier: number of times node m's payload crosses a link on
/// its way to (or from) the aggregation node.
inline std::uint64_t hop_multiplier(const Topology& topo, Index m) {
  return static_cast<std::uint64_t>(topo.distance(m, topo.hub()));
}

struct CostResult {
  std::uint64_t count = 0;
  double ratio = 0.0;
};

/// Real values exchanged when every node ships its raw N_r x N_C signal to the
/// aggregation node and receives its estimate back.
inline std::uint64_t centralized_cost(Index m_clusters, Index n_rx, Index n_freq, TopologyKind kind) {
  require(m_clusters >= 2, "centralized_cost: needs at least two nodes");
  require(n_rx % m_clusters == 0, "centralized_cost: cluster count must divide N_R");
  const Topology topo(kind, m_clusters);
  const auto n_r = static_cast<std::uint64_t>(n_rx / m_clusters);
  std::uint64_t hops = 0;
  for (Index m = 1; m <= m_clusters; ++m) hops += hop_multiplier(topo, m);
  return 4ull * n_r * static_cast<std::uint64_t>(n_freq) * hops;
}

inline double cost_ratio(std::uint64_t count, Index m_clusters, Index n_rx, Index n_freq, TopologyKind kind) {
  if (m_clusters < 2) return 0.0;
  return static_cast<double>(count) / static_cast<double>(centralized_cost(m_clusters, n_rx, n_freq, kind));
}

/// Column-sparse exchange: (2 N_r + 1) values per column each way.
inline CostResult age_cost(const std::vector<Index>& ul_cols, const std::vector<Index>& dl_cols, Index n_r,
                           Index m_clusters, TopologyKind kind, Index n_freq) {
  require(static_cast<Index>(ul_cols.size()) == m_clusters && static_cast<Index>(dl_cols.size()) == m_clusters,
          "age_cost: one count per node required");
  const Topology topo(kind, m_clusters);
  std::uint64_t weighted = 0;
  for (Index m = 1; m <= m_clusters; ++m) {
    const auto k = static_cast<std::size_t>(m - 1);
    require(ul_cols[k] >= 0 && dl_cols[k] >= 0, "age_cost: negative column count");
    weighted += hop_multiplier(topo, m) * static_cast<std::uint64_t>(ul_cols[k] + dl_cols[k]);
  }
  CostResult r;
  r.count = (2ull * static_cast<std::uint64_t>(n_r) + 1ull) * weighted;
  r.ratio = cost_ratio(r.count, m_clusters, n_r * m_clusters, n_freq, kind);
  return r;
}

/// Row-and-column block uplink plus column-sparse downlink.
inline CostResult eag_cost(const std::vector<Index>& ul_rows, const std::vector<Index>& ul_cols,
                           const std::vector<Index>& dl_cols, Index n_r, Index m_clusters, TopologyKind kind,
                           Index n_freq) {
  require(static_cast<Index>(ul_rows.size()) == m_clusters && static_cast<Index>(ul_cols.size()) == m_clusters &&
              static_cast<Index>(dl_cols.size()) == m_clusters,
          "eag_cost: one count per node required");
  const Topology topo(kind, m_clusters);
  std::uint64_t count = 0;
  for (Index m = 1; m <= m_clusters; ++m) {
    const auto k = static_cast<std::size_t>(m - 1);
    require(ul_rows[k] >= 0 && ul_cols[k] >= 0 && dl_cols[k] >= 0, "eag_cost: negative count");
    const auto r = static_cast<std::uint64_t>(ul_rows[k]);
    const auto c = static_cast<std::uint64_t>(ul_cols[k]);
    const std::uint64_t up = 2ull * r * c + r + c;
    const std::uint64_t down = (2ull * static_cast<std::uint64_t>(n_r) + 1ull) * static_cast<std::uint64_t>(dl_cols[k]);
    count += hop_multiplier(topo, m) * (up + down);
  }
  CostResult out;
  out.count = count;
  out.ratio = cost_ratio(count, m_clusters, n_r * m_clusters, n_freq, kind);
  return out;
}

/// Ledger of the centralized exchange (raw signal up, estimate down).
inline CommLedger centralized_ledger(Index m_clusters, Index n_rx, Index n_freq, TopologyKind kind) {
  require(m_clusters >= 1 && n_rx % m_clusters == 0, "centralized_ledger: cluster count must divide N_R");
  const Topology topo(kind, m_clusters);
  const auto payload = 2ull * static_cast<std::uint64_t>(n_rx / m_clusters) * static_cast<std::uint64_t>(n_freq);
  CommLedger ledger;
  for (Index m = 1; m <= m_clusters; ++m) route(payload, m, topo.hub(), topo, ledger, Phase::uplink);
  for (Index m = 1; m <= m_clusters; ++m) route(payload, topo.hub(), m, topo, ledger, Phase::downlink);
  return ledger;
}

}  // namespace dce
